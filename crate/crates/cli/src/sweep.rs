//! Time-sweep runner: builds the chain and detector once, evaluates POVMs,
//! entropies, and bounds at each time, and emits CSV/JSON with a metadata
//! sidecar.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use qscramble::bounds::{
    scrambling_bound_exact_trace, scrambling_bound_taylor, BoundMethod, BoundReport, Minimizer,
    TERM_C0, TERM_G1_SUM, TERM_G2_CLASSICAL, TERM_QUASI_11, TERM_QUASI_22, TERM_QUASI_CROSS,
};
use qscramble::entropy::{entropy_of_order, entropy_pair_beta, outcome_distribution};
use qscramble::models::{
    build_hamiltonian, gibbs_state, w_eigenstate, DensityState, TimeEvolver,
};
use qscramble::operators::{eig_hermitian, embed_pauli, CVector, Operator, PauliAxis};
use qscramble::quasiprob::otoc;
use qscramble::weakmeas::{
    fine_basis_from_unitary, forward_povm, is_nontrivial, reverse_povm, DetectorGrid,
    StrongMeasurement,
};

use crate::config::{ExperimentConfig, OutputFormat, StateSpec};

/// One sweep time's worth of observables, bounds, and bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub t: f64,
    pub otoc_re: f64,
    pub otoc_im: f64,
    pub lhs_vn: f64,
    pub lhs_minmax: f64,
    pub bound_taylor: f64,
    pub bound_exact_trace: f64,
    pub bound_exact_c: f64,
    pub term_c0: f64,
    pub term_g1_sum: f64,
    pub term_g2_classical: f64,
    pub term_quasi_cross: f64,
    pub term_quasi_11: f64,
    pub term_quasi_22: f64,
    pub min_j1: i32,
    pub min_j2: i32,
    pub min_w: String,
    pub t_star_estimate: f64,
    /// LHS per configured Rényi order, keyed by the printed order.
    pub extra_lhs: BTreeMap<String, f64>,
    /// Row-wise theorem check: every LHS at least every computed bound.
    pub satisfied: bool,
    pub warnings: Vec<String>,
}

/// Sidecar metadata echoed next to every emitted sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepMetadata {
    pub config: ExperimentConfig,
    pub library_version: String,
    pub grid_cells: usize,
    pub grid_window: (i32, i32),
    pub grid_raw_total: f64,
    pub nontrivial: bool,
    pub weak_ratio_mean: f64,
    pub t_star_estimate: f64,
    pub all_rows_satisfied: bool,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub metadata: SweepMetadata,
    pub records: Vec<SweepRecord>,
}

pub(crate) fn initial_state(
    config: &ExperimentConfig,
    h: &Operator,
    w: &Operator,
) -> Result<DensityState> {
    let dim = h.dim();
    Ok(match config.protocol.state {
        StateSpec::Gibbs { beta } => gibbs_state(h, beta)?,
        StateSpec::WEigenstate { t_star, which } => w_eigenstate(w, h, t_star, which)?,
        StateSpec::MaximallyMixed => DensityState::maximally_mixed(dim),
        StateSpec::PureComputational { index } => {
            if index >= dim {
                bail!("pure-state index {index} out of range for dimension {dim}");
            }
            let mut psi = CVector::zeros(dim);
            psi[index] = num_complex::Complex64::new(1.0, 0.0);
            DensityState::from_pure(&psi, format!("computational basis {index}"))?
        }
    })
}

struct PerTime {
    record: SweepRecord,
}

fn term_or_nan(report: Option<&BoundReport>, key: &str) -> f64 {
    report.and_then(|r| r.term(key)).unwrap_or(f64::NAN)
}

fn minimizer_fields(report: Option<&BoundReport>) -> (i32, i32, String) {
    match report.map(|r| &r.minimizer) {
        Some(Minimizer::Scrambling { j1, j2, w1, w2 }) => {
            let w = if (w1.value - w2.value).abs() < 1e-12 && w1.sub == w2.sub {
                w1.to_string()
            } else {
                format!("{w1};{w2}")
            };
            (*j1, *j2, w)
        }
        _ => (0, 0, String::from("-")),
    }
}

/// Runs the configured sweep. Expensive per-time artifacts (the evolution
/// unitary, evolved projectors, bound traces) are computed once per time and
/// shared across bound methods and entropies; times run in parallel and the
/// records are ordered by `t` before return.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let model = &config.model;
    let n = model.n_sites;
    let h = build_hamiltonian(model).map_err(|e| anyhow!("hamiltonian: {e}"))?;
    let v = embed_pauli(PauliAxis::Z, 0, n)?;
    let w = embed_pauli(PauliAxis::Z, n - 1, n)?;
    let evolver = TimeEvolver::new(&h)?;
    let rho = initial_state(config, &h, &w)?;
    let grid = DetectorGrid::build(&config.detector)?;

    let v_sd = eig_hermitian(&v, None)?;
    let proj_v1 = v_sd.cluster_near(config.protocol.v1).projector();
    let proj_v2 = v_sd.cluster_near(config.protocol.v2).projector();
    let w_sd = eig_hermitian(&w, None)?;
    let w_clusters = w_sd.labeled_projectors();

    let mut metadata_warnings = Vec::new();
    let nontrivial = is_nontrivial(config.detector.delta, config.detector.length, n);
    if !nontrivial {
        metadata_warnings.push(
            "detector resolution violates the nontriviality condition; \
             the leading bound term is negative"
                .to_string(),
        );
    }

    let times = config.sweep.times();
    let per_time: Result<Vec<PerTime>> = times
        .par_iter()
        .map(|&t| {
            run_time_point(config, t, &evolver, &w, &v, &w_clusters, &proj_v1, &proj_v2, &grid, &rho)
        })
        .collect();
    let mut records: Vec<SweepRecord> = per_time?.into_iter().map(|pt| pt.record).collect();
    records.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());

    let t_star = estimate_t_star(&records);
    for r in &mut records {
        r.t_star_estimate = t_star;
    }
    let all_rows_satisfied = records.iter().all(|r| r.satisfied);

    let metadata = SweepMetadata {
        config: config.clone(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        grid_cells: grid.len(),
        grid_window: (
            grid.ells().first().copied().unwrap_or(0),
            grid.ells().last().copied().unwrap_or(0),
        ),
        grid_raw_total: grid.raw_total(),
        nontrivial,
        weak_ratio_mean: grid.weak_ratio_mean(),
        t_star_estimate: t_star,
        all_rows_satisfied,
        warnings: metadata_warnings,
        timestamp_unix: None,
    };
    Ok(SweepOutput { metadata, records })
}

#[allow(clippy::too_many_arguments)]
fn run_time_point(
    config: &ExperimentConfig,
    t: f64,
    evolver: &TimeEvolver,
    w: &Operator,
    v: &Operator,
    w_clusters: &[(f64, Operator)],
    proj_v1: &Operator,
    proj_v2: &Operator,
    grid: &DetectorGrid,
    rho: &DensityState,
) -> Result<PerTime> {
    let u = evolver.unitary(t);
    let wt = TimeEvolver::evolve_with(w, &u)?;
    let f = otoc(Some(rho), v, &wt)?;

    let strong = if config.protocol.fine_grained {
        StrongMeasurement::Fine(fine_basis_from_unitary(w, &u)?)
    } else {
        // W is a ±1 single-site Pauli, so its evolved eigenspace projectors
        // are (1 ± W(t))/2; conjugating each cluster separately would repeat
        // the same products.
        let dim = wt.dim();
        let evolved: Vec<(f64, Operator)> = w_clusters
            .iter()
            .map(|(label, _)| {
                let mut m = wt.matrix().map(|z| z * (0.5 * label));
                for k in 0..dim {
                    m[(k, k)] += num_complex::Complex64::new(0.5, 0.0);
                }
                Ok((*label, Operator::new_hermitian(m)?))
            })
            .collect::<qscramble::Result<_>>()?;
        StrongMeasurement::from_clusters(evolved)
    };

    let fwd = forward_povm(grid, config.protocol.v1, proj_v1, strong.clone())?;
    let rev = reverse_povm(grid, config.protocol.v2, proj_v2, strong)?;

    let fwd_dist = outcome_distribution(&fwd, rho)?;
    let rev_dist = outcome_distribution(&rev, rho)?;
    let lhs_vn = entropy_of_order(&fwd_dist, 1.0)? + entropy_of_order(&rev_dist, 1.0)?;
    let lhs_minmax =
        entropy_of_order(&fwd_dist, f64::INFINITY)? + entropy_of_order(&rev_dist, 0.5)?;
    let mut extra_lhs = BTreeMap::new();
    for &alpha in &config.alphas {
        let beta = entropy_pair_beta(alpha)?;
        let lhs = entropy_of_order(&fwd_dist, alpha)? + entropy_of_order(&rev_dist, beta)?;
        let key = if alpha.is_infinite() { "inf".to_string() } else { format!("{alpha}") };
        extra_lhs.insert(key, lhs);
    }

    let mut warnings = Vec::new();
    let mut taylor: Option<BoundReport> = None;
    let mut exact: Option<BoundReport> = None;
    let mut exact_c = f64::NAN;
    for method in &config.bound_methods {
        match method {
            BoundMethod::Taylor => {
                let report = scrambling_bound_taylor(&fwd, &rev, None)?;
                warnings.extend(report.warnings.iter().cloned());
                taylor = Some(report);
            }
            BoundMethod::ExactTrace => {
                exact = Some(scrambling_bound_exact_trace(&fwd, &rev)?);
            }
            BoundMethod::ExactOverlap => {
                exact_c = -qscramble::bounds::overlap_c_exact(&fwd, &rev, None)?.log2();
            }
        }
    }

    // Row-wise theorem check. The second-order bound may legitimately
    // overshoot at strong coupling, so it participates only when its validity
    // diagnostic stayed quiet.
    let mut checked_bounds = Vec::new();
    if let Some(r) = &taylor {
        if r.warnings.is_empty() {
            checked_bounds.push(r.value);
        }
    }
    if let Some(r) = &exact {
        checked_bounds.push(r.value);
    }
    if exact_c.is_finite() {
        checked_bounds.push(exact_c);
    }
    let mut satisfied = true;
    for &b in &checked_bounds {
        if lhs_vn < b - 1e-9 || lhs_minmax < b - 1e-9 {
            satisfied = false;
        }
        for lhs in extra_lhs.values() {
            if *lhs < b - 1e-9 {
                satisfied = false;
            }
        }
    }

    let term_source = taylor.as_ref().or(exact.as_ref());
    let primary = exact.as_ref().or(taylor.as_ref());
    let (min_j1, min_j2, min_w) = minimizer_fields(primary);
    let record = SweepRecord {
        t,
        otoc_re: f.re,
        otoc_im: f.im,
        lhs_vn,
        lhs_minmax,
        bound_taylor: taylor.as_ref().map_or(f64::NAN, |r| r.value),
        bound_exact_trace: exact.as_ref().map_or(f64::NAN, |r| r.value),
        bound_exact_c: exact_c,
        term_c0: term_or_nan(term_source, TERM_C0),
        term_g1_sum: term_or_nan(term_source, TERM_G1_SUM),
        term_g2_classical: term_or_nan(term_source, TERM_G2_CLASSICAL),
        term_quasi_cross: term_or_nan(term_source, TERM_QUASI_CROSS),
        term_quasi_11: term_or_nan(term_source, TERM_QUASI_11),
        term_quasi_22: term_or_nan(term_source, TERM_QUASI_22),
        min_j1,
        min_j2,
        min_w,
        t_star_estimate: f64::NAN,
        extra_lhs,
        satisfied,
        warnings,
    };
    Ok(PerTime { record })
}

/// Applies the exceptional-regime overrides to a base configuration and runs
/// it: fine-grained `W(t)` measurements, a `W(t*)` eigenstate unless one is
/// already configured, `g̃ = 0.16`, and the exact trace bound only (the
/// second-order expansion is invalid at this coupling).
pub fn run_fig4(base: &ExperimentConfig) -> Result<SweepOutput> {
    let mut config = base.clone();
    config.detector.gtilde = 0.16;
    config.protocol.fine_grained = true;
    if !matches!(config.protocol.state, StateSpec::WEigenstate { .. }) {
        config.protocol.state = StateSpec::WEigenstate { t_star: 4.0, which: 0 };
    }
    config.bound_methods = vec![BoundMethod::ExactTrace];
    run_sweep(&config)
}

/// First time the OTOC's real part crosses below 1/2, linearly interpolated
/// between bracketing grid points; NaN when it never does.
pub fn estimate_t_star(records: &[SweepRecord]) -> f64 {
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.otoc_re >= 0.5 && b.otoc_re < 0.5 {
            let frac = (a.otoc_re - 0.5) / (a.otoc_re - b.otoc_re);
            return a.t + frac * (b.t - a.t);
        }
    }
    if records.first().is_some_and(|r| r.otoc_re < 0.5) {
        return records[0].t;
    }
    f64::NAN
}

fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

/// CSV body with the fixed column order.
pub fn csv_string(records: &[SweepRecord]) -> String {
    let mut out = String::from(
        "t,otoc_re,otoc_im,lhs_vn,lhs_minmax,bound_taylor,bound_exact_trace,term_c0,\
         term_g1_sum,term_g2_classical,term_quasi_cross,term_quasi_11,term_quasi_22,\
         min_j1,min_j2,min_w,t_star_estimate\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt(r.t),
            fmt(r.otoc_re),
            fmt(r.otoc_im),
            fmt(r.lhs_vn),
            fmt(r.lhs_minmax),
            fmt(r.bound_taylor),
            fmt(r.bound_exact_trace),
            fmt(r.term_c0),
            fmt(r.term_g1_sum),
            fmt(r.term_g2_classical),
            fmt(r.term_quasi_cross),
            fmt(r.term_quasi_11),
            fmt(r.term_quasi_22),
            r.min_j1,
            r.min_j2,
            r.min_w,
            fmt(r.t_star_estimate),
        ));
    }
    out
}

/// Parses a CSV produced by [`csv_string`] back into the numeric columns.
pub fn parse_csv(text: &str) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty CSV"))?;
    if !header.starts_with("t,otoc_re") {
        bail!("unexpected CSV header");
    }
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split(',').map(str::to_string).collect());
    }
    Ok(rows)
}

/// Writes the sweep to `path` in the configured format, with a
/// `<stem>.meta.json` sidecar next to CSV outputs. `reproducible` suppresses
/// the timestamp.
pub fn emit(output: &SweepOutput, format: OutputFormat, path: &Path, reproducible: bool) -> Result<()> {
    if output.records.is_empty() {
        bail!("no records to emit");
    }
    let mut metadata = output.metadata.clone();
    metadata.timestamp_unix = if reproducible {
        None
    } else {
        Some(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        )
    };
    match format {
        OutputFormat::Csv => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            file.write_all(csv_string(&output.records).as_bytes())?;
            let sidecar = path.with_extension("meta.json");
            let mut meta_file = std::fs::File::create(&sidecar)
                .with_context(|| format!("creating {}", sidecar.display()))?;
            serde_json::to_writer_pretty(&mut meta_file, &metadata)?;
            meta_file.write_all(b"\n")?;
        }
        OutputFormat::Json => {
            let combined = SweepOutput { metadata, records: output.records.clone() };
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            serde_json::to_writer_pretty(&mut file, &combined)?;
            file.write_all(b"\n")?;
        }
    }
    Ok(())
}
