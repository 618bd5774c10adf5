//! Subcommand bodies. Each returns a process exit code and writes human
//! output to `out`, problems to `err`.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use hidim_core::analytic::bayes_error;
use hidim_core::exec::{with_threads, Execution};
use hidim_core::paramsets::{Decay, SparsityClass};
use hidim_core::stats::fmt_sig;
use hidim_core::sweep::{moment_diagnostics, run_sweep, Family, Tolerance, MIN_MOMENT_REPLICATES};
use hidim_core::Error;

use crate::config::RunConfig;
use crate::exit;
use crate::svg;

/// Thread count from `HIDIM_THREADS` if set, else `configured`.
pub fn resolve_threads(configured: usize, env: Option<&str>) -> Result<usize, String> {
    match env.map(str::trim) {
        None | Some("") => Ok(configured),
        Some(v) => v.parse().map_err(|_| format!("HIDIM_THREADS must be a non-negative integer, got '{v}'")),
    }
}

fn env_threads() -> Option<String> {
    std::env::var(crate::THREADS_ENV).ok()
}

/// Relative output paths are taken relative to the config file.
fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new("")).join(p)
    }
}

fn load(config_path: &Path, err: &mut dyn Write) -> Result<RunConfig, i32> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        let _ = writeln!(err, "error: cannot read {}: {e}", config_path.display());
        exit::INVALID_CONFIG
    })?;
    RunConfig::parse(&text).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", config_path.display());
        exit::INVALID_CONFIG
    })
}

fn write_file(path: &Path, contents: &str, err: &mut dyn Write) -> Result<(), i32> {
    fs::write(path, contents).map_err(|e| {
        let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
        exit::UNWRITABLE_OUTPUT
    })
}

pub fn cmd_sweep(config_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match load(config_path, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let threads = match resolve_threads(cfg.threads, env_threads().as_deref()) {
        Ok(t) => t,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return exit::INVALID_CONFIG;
        }
    };
    let Some(csv_rel) = cfg.csv.as_deref() else {
        let _ = writeln!(err, "error: [output] csv is required for sweep");
        return exit::INVALID_CONFIG;
    };
    let csv_path = resolve(config_path, csv_rel);
    // Fail on an unwritable destination before spending any compute.
    if let Err(e) = File::create(&csv_path) {
        let _ = writeln!(err, "error: cannot write {}: {e}", csv_path.display());
        return exit::UNWRITABLE_OUTPUT;
    }

    let result = match with_threads(threads, || run_sweep(&cfg.plan, Execution::Parallel)) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::INVALID_CONFIG;
        }
    };
    if let Err(code) = write_file(&csv_path, &result.to_csv(cfg.timing), err) {
        return code;
    }
    let _ = writeln!(out, "wrote {} ({} rows)", csv_path.display(), result.rows.len());
    for (k, v) in &result.metadata {
        let _ = writeln!(out, "  {k} = {v}");
    }

    if let (true, Some(svg_rel)) = (cfg.plot, cfg.svg.as_deref()) {
        let svg_path = resolve(config_path, svg_rel);
        let csv_text = match fs::read_to_string(&csv_path) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(err, "error: cannot re-read {}: {e}", csv_path.display());
                return exit::UNWRITABLE_OUTPUT;
            }
        };
        let floor = bayes_error(cfg.plan.family.alpha()).unwrap_or(f64::NAN);
        let chart = match svg::render(&csv_text, &cfg.plan.family.label(), floor) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return exit::FAILED;
            }
        };
        if let Err(code) = write_file(&svg_path, &chart, err) {
            return code;
        }
        let _ = writeln!(out, "wrote {}", svg_path.display());
    }

    if result.has_invalid() {
        let bad = result.rows.iter().filter(|r| !r.estimate.valid).count();
        let _ = writeln!(err, "warning: {bad} cell(s) flagged invalid (too many untrainable replicates)");
        return exit::INVALID_CELLS;
    }
    exit::OK
}

pub fn cmd_diagnose(d: usize, n: usize, beta: f64, reps: usize, seed: u64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let threads = match resolve_threads(0, env_threads().as_deref()) {
        Ok(t) => t,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return exit::INVALID_CONFIG;
        }
    };
    let report = match with_threads(threads, || moment_diagnostics(d, n, beta, reps, seed, Execution::Parallel)) {
        Ok(r) => r,
        Err(Error::InsufficientReplicates { needed, got }) => {
            let _ = writeln!(err, "inconclusive: {got} replicates, need at least {needed}");
            return exit::INCONCLUSIVE;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit::INVALID_CONFIG;
        }
    };
    debug_assert!(reps >= MIN_MOMENT_REPLICATES);

    let _ = writeln!(out, "d = {d}, n = {n}, beta = {beta}, replicates = {reps}, seed = {seed}");
    let _ = writeln!(out, "{:<20} {:>16} {:>16} {:>14} {:>12}  result", "quantity", "closed_form", "empirical", "relative_error", "tolerance");
    for row in &report.rows {
        let (rel, tol) = match row.tolerance {
            Tolerance::Relative(t) => (fmt_sig(row.deviation, 4), format!("{t}")),
            Tolerance::StdErrors(k) => {
                let rel = if row.closed_form == 0.0 { "-".to_string() } else { fmt_sig(row.deviation, 4) };
                (rel, format!("{k} SE"))
            }
        };
        let _ = writeln!(
            out,
            "{:<20} {:>16} {:>16} {:>14} {:>12}  {}",
            row.quantity,
            row.closed_form,
            fmt_sig(row.empirical, 8),
            rel,
            tol,
            if row.pass { "pass" } else { "FAIL" }
        );
    }
    if let Some(z) = report.rows.iter().find(|r| matches!(r.tolerance, Tolerance::StdErrors(_))) {
        let _ = writeln!(out, "({} deviation: {} standard errors)", z.quantity, fmt_sig(z.deviation, 3));
    }
    let qs: Vec<String> = report.w_quantiles.iter().map(|(q, w)| format!("q{q}={}", fmt_sig(*w, 4))).collect();
    let _ = writeln!(out, "W quantiles: {}", qs.join(" "));
    let ex: Vec<String> = report.w_exceedance.iter().map(|(e, p)| format!("P(|W|>{e})={}", fmt_sig(*p, 4))).collect();
    let _ = writeln!(out, "W exceedance: {}", ex.join(" "));
    let _ = writeln!(out, "(n/d)*denominator mean: {} (beta^2 = {})", fmt_sig(report.scaled_denominator, 6), beta * beta);
    if report.all_pass() {
        exit::OK
    } else {
        exit::FAILED
    }
}

pub fn cmd_bayes(alpha: f64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match bayes_error(alpha) {
        Ok(p) => {
            let _ = writeln!(out, "{p:.8}");
            exit::OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit::INVALID_CONFIG
        }
    }
}

/// Sorted magnitude profile `M(d)·decay(k)` of each sparsity class, as CSV.
pub fn curves_csv(cfg: &RunConfig) -> Result<String, String> {
    let decays: Vec<Decay> = match cfg.plan.family {
        Family::SparseExp { a, .. } => {
            let ps = if cfg.curve_params.is_empty() { vec![a] } else { cfg.curve_params.clone() };
            ps.into_iter().map(|a| Decay::Exp { a }).collect()
        }
        Family::SparsePoly { b, .. } => {
            let ps = if cfg.curve_params.is_empty() { vec![b] } else { cfg.curve_params.clone() };
            ps.into_iter().map(|b| Decay::Poly { b }).collect()
        }
        _ => return Err(format!("curves needs a sparse family, got '{}'", cfg.plan.family.label())),
    };
    let mut s = String::from("class,d,k,magnitude\n");
    for decay in decays {
        for &d in &cfg.plan.d_grid {
            let class = SparsityClass::new(decay, d).map_err(|e| e.to_string())?;
            let label = class.label();
            for (k, m) in class.sorted_magnitudes().into_iter().enumerate() {
                s.push_str(&format!("{label},{d},{},{}\n", k + 1, fmt_sig(m, 10)));
            }
        }
    }
    Ok(s)
}

pub fn cmd_curves(config_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match load(config_path, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let csv = match curves_csv(&cfg) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return exit::INVALID_CONFIG;
        }
    };
    match cfg.curves.as_deref() {
        Some(rel) => {
            let path = resolve(config_path, rel);
            if let Err(code) = write_file(&path, &csv, err) {
                return code;
            }
            let _ = writeln!(out, "wrote {}", path.display());
        }
        None => {
            if let Err(e) = out.write_all(csv.as_bytes()) {
                let _ = writeln!(err, "error: {e}");
                return exit::UNWRITABLE_OUTPUT;
            }
        }
    }
    exit::OK
}

/// Runs `f` with locked stdout/stderr.
pub fn with_stdio(f: impl FnOnce(&mut dyn Write, &mut dyn Write) -> i32) -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = f(&mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}
