//! Command-line front end. [`run`] takes the argument vector and returns the
//! exit code together with everything destined for standard output, so the
//! whole interface can be exercised in-process.
//!
//! Exit codes: 0 when every verdict of the command passes, 1 when one fails,
//! 2 for unusable input (unreadable or invalid manifest, missing data, bad
//! flags).

use std::collections::BTreeMap;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use nkgeom::cone::{build_cone_3form, fernandez_gray_check, metric_roundtrip};
use nkgeom::constants;
use nkgeom::frame::{catalog, catalog_names, perturbed_j, DEFAULT_PERTURBATION_MAGNITUDE};
use nkgeom::nijenhuis::{cartan_compatibility, NijenhuisTensor};
use nkgeom::par::{parallel_available, set_threads, Exec};
use nkgeom::su3::{lemma_d_splitting_checks, nk_equivalence_suite, SU3Structure};
use nkgeom::torsion::{conformal_solve, least_squares_omega, normalize_rho, reference_hermitian_form, torsion_criterion};
use nkgeom::variation::{criticality_test, find_critical, psi_value, SearchOptions};
use nkgeom::{AlmostComplexStructure, CoframeAlgebra, Form, GeometryError, Manifest};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "nkgeom", version, about = "Nijenhuis tensors, nearly Kähler structures and G2 cones on homogeneous models")]
struct Cli {
    /// Emit a machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for parallel evaluation (0 keeps the default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Include wall-clock timing in the report. Off by default so that
    /// repeated runs produce identical output.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Built-in models.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Jacobi identity, validity of J and of an optional Hermitian form.
    Check { input: String },
    /// N* by both routes, its determinant and the density Ψ.
    Nijenhuis { input: String },
    /// Skew-torsion criterion and recovery of the Hermitian form from J.
    Torsion { input: String },
    /// Equivalence suite for nearly Kähler structures.
    Nk { input: String },
    /// G2 cone: stability, closed and co-closed tests, metric roundtrip.
    Cone { input: String },
    /// Ψ and, optionally, its first variation over invariant deformations.
    Functional {
        input: String,
        #[arg(long)]
        gradient: bool,
    },
    /// Search for a critical point of Ψ starting from the manifest's J.
    Optimize {
        input: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Perturb the starting J with this seed before searching.
        #[arg(long)]
        seed: Option<u64>,
        /// Relative size of the seeded perturbation.
        #[arg(long, default_value_t = DEFAULT_PERTURBATION_MAGNITUDE)]
        magnitude: f64,
        /// Write the result as a manifest to this path.
        #[arg(long)]
        emit: Option<String>,
        /// Name recorded in the emitted manifest.
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    /// Names of the built-in models.
    List,
    /// Print a built-in model as a manifest.
    Show { name: String },
}

/// Unusable input; always exit code 2.
#[derive(Debug)]
struct InputError(String);

impl From<GeometryError> for InputError {
    fn from(e: GeometryError) -> Self {
        InputError(e.to_string())
    }
}

struct Loaded {
    manifest: Manifest,
    hash: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a manifest from a path, or from the catalog as `catalog:NAME`.
fn load(input: &str) -> Result<Loaded, InputError> {
    let (manifest, text) = match input.strip_prefix("catalog:") {
        Some(name) => {
            let m = catalog(name)?;
            let t = m.to_json();
            (m, t)
        }
        None => {
            let text = std::fs::read_to_string(input).map_err(|e| InputError(format!("{input}: {e}")))?;
            (Manifest::from_json(&text).map_err(|e| InputError(format!("{input}: {e}")))?, text)
        }
    };
    Ok(Loaded { manifest, hash: hex(&Sha256::digest(text.as_bytes())) })
}

fn require_j(m: &Manifest) -> Result<AlmostComplexStructure, InputError> {
    m.complex_structure()?.ok_or_else(|| InputError("manifest has no J".into()))
}

/// The Hermitian form a command works with, and where it came from.
fn hermitian(alg: &CoframeAlgebra, j: &AlmostComplexStructure, m: &Manifest) -> Result<(Form, &'static str), InputError> {
    if let Some(w) = m.omega_form() {
        return Ok((w, "manifest"));
    }
    if let Some(w) = conformal_solve(alg, j)?.omega {
        return Ok((w, "conformal"));
    }
    let (w, _) = least_squares_omega(alg, j);
    if j.is_positive(&w).0 {
        if let Ok(n) = normalize_rho(alg, j, &w) {
            return Ok((n, "least_squares"));
        }
    }
    Ok((reference_hermitian_form(j), "reference"))
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|r| json!(m.row(r).iter().copied().collect::<Vec<f64>>())).collect())
}

fn complex_matrix_json(m: &nalgebra::Matrix3<nkgeom::C64>) -> Value {
    json!({
        "re": (0..3).map(|r| (0..3).map(|c| m[(r, c)].re).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "im": (0..3).map(|r| (0..3).map(|c| m[(r, c)].im).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn form_json(f: &Form) -> Value {
    Value::Array(
        f.terms()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(m, c)| {
                let idx: Vec<usize> = (0..8).filter(|i| m & (1 << i) != 0).map(|i| i + 1).collect();
                json!({ "indices": idx, "re": c.re, "im": c.im })
            })
            .collect(),
    )
}

struct Report {
    results: Map<String, Value>,
    verdicts: BTreeMap<String, bool>,
}

impl Report {
    fn new() -> Self {
        Report { results: Map::new(), verdicts: BTreeMap::new() }
    }

    fn set(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }

    fn verdict(&mut self, key: &str, pass: bool) {
        self.verdicts.insert(key.to_string(), pass);
    }
}

fn cmd_check(m: &Manifest) -> Result<Report, InputError> {
    let mut r = Report::new();
    let alg = m.algebra()?;
    let jac = alg.check_jacobi();
    r.set("jacobi", json!({ "holds": jac.holds, "residual_d": jac.residual_d, "residual_bracket": jac.residual_bracket }));
    r.verdict("jacobi", jac.holds);
    if let Some(j) = m.complex_structure()? {
        let jm = j.matrix();
        let sq = (jm * jm + DMatrix::<f64>::identity(6, 6)).norm();
        r.set("j_squared_residual", json!(sq));
        r.set("j_orientation", json!(j.orientation_sign()));
        r.verdict("j_squares_to_minus_one", sq <= constants::TOL_EXACT * jm.norm().max(1.0));
        if let Some(w) = m.omega_form() {
            let real = w.is_real(1e-12 * w.max_abs().max(1e-300));
            let off = (&j.project(&w, 1, 1)? - &w).max_abs();
            let (pos, min) = j.is_positive(&w);
            r.set("omega", json!({ "real": real, "off_type_residual": off, "min_metric_eigenvalue": min }));
            r.verdict("omega_hermitian", real && off <= 1e-10 * w.max_abs() && pos);
        }
    }
    Ok(r)
}

fn cmd_nijenhuis(m: &Manifest) -> Result<Report, InputError> {
    let mut r = Report::new();
    let alg = m.algebra()?;
    let j = require_j(m)?;
    let nd = NijenhuisTensor::via_d(&alg, &j);
    let nb = NijenhuisTensor::via_brackets(&alg, &j);
    let route = (nd.matrix() - nb.matrix() * nkgeom::C64::new(constants::NIJENHUIS_ROUTE, 0.0)).norm();
    let scale = nd.matrix().norm().max(1.0);
    let vol = nd.volume();
    let det = nd.det();
    r.set("n_star", complex_matrix_json(nd.matrix()));
    r.set("route_residual", json!(route));
    r.set("det", json!({ "re": det.re, "im": det.im, "abs": det.norm() }));
    r.set("nondegenerate", json!(nd.is_nondegenerate()));
    r.set("psi", json!(vol.psi));
    r.set("orientation", json!(j.orientation_sign()));
    r.verdict("routes_agree", route <= constants::TOL_EXACT * scale);
    r.verdict("volume_real", vol.form.is_real(1e-14 * vol.form.max_abs().max(1e-300)));
    let w = reference_hermitian_form(&j);
    let cartan = cartan_compatibility(&alg, &j, &w)?;
    r.set("cartan_residual", json!(cartan));
    r.verdict("cartan_identity", cartan <= constants::TOL_IDENTITY * w.norm().max(1.0) * scale);
    Ok(r)
}

fn cmd_torsion(m: &Manifest) -> Result<Report, InputError> {
    let mut r = Report::new();
    let alg = m.algebra()?;
    let j = require_j(m)?;
    let sol = conformal_solve(&alg, &j)?;
    r.set(
        "conformal",
        json!({
            "dimension": sol.dimension(),
            "contains_positive": sol.contains_positive,
            "smallest_singular_values": sol.singular_values.iter().take(3).copied().collect::<Vec<_>>(),
        }),
    );
    let (w, source) = hermitian(&alg, &j, m)?;
    r.set("omega_source", json!(source));
    r.set("omega", form_json(&w));
    let tr = torsion_criterion(&alg, &j, &w)?;
    r.set("rho_norm", json!(tr.rho_norm));
    r.set("skew_residual", json!(tr.residual));
    r.verdict("admits_skew_torsion", tr.admits_connection);
    r.verdict("conformal_unique", sol.dimension() == 1 && sol.contains_positive);
    Ok(r)
}

fn cmd_nk(m: &Manifest) -> Result<Report, InputError> {
    let mut r = Report::new();
    let alg = m.algebra()?;
    let j = require_j(m)?;
    let (w, source) = hermitian(&alg, &j, m)?;
    r.set("omega_source", json!(source));
    let s = nk_equivalence_suite(&alg, &j, &w)?;
    r.set("hypothesis", json!(s.hypothesis));
    r.set("degenerate", json!(s.degenerate));
    r.set("lambda", json!(s.lambda));
    r.set("torsion_residual", json!(s.torsion_residual));
    if let Some(sr) = s.structure_report {
        r.set("structure", json!({ "r1": sr.r1, "r2": sr.r2, "r3": sr.r3, "d_re_omega": sr.d_re_omega }));
    }
    let nr = &s.nabla_report;
    r.set("nabla", json!({ "antisymmetry": nr.antisymmetry, "d_residual": nr.d_residual, "strictness": nr.strictness }));
    r.set("consistent", json!(s.consistent));
    if let Ok(st) = SU3Structure::from_hermitian(&alg, &j, &w) {
        if let Ok(l) = lemma_d_splitting_checks(&alg, &st) {
            r.set(
                "lemma",
                json!({
                    "d01_omega": l.d01_omega,
                    "d10_omega_bar": l.d10_omega_bar,
                    "outer_parts": l.outer_parts,
                    "d_omega_via_bar": l.d_omega_via_bar,
                    "d_omega_via_outer": l.d_omega_via_outer,
                    "n_star_residual": l.n_star_residual,
                }),
            );
        }
    }
    r.verdict("torsion", s.torsion);
    r.verdict("structure_equations", s.structure);
    r.verdict("nabla_omega", s.nabla);
    r.verdict("consistent", s.consistent);
    Ok(r)
}

fn cmd_cone(m: &Manifest) -> Result<Report, InputError> {
    let mut r = Report::new();
    let alg = m.algebra()?;
    let j = require_j(m)?;
    let (w, source) = hermitian(&alg, &j, m)?;
    r.set("omega_source", json!(source));
    let s = match SU3Structure::best_fit(&alg, &j, &w) {
        Ok(s) => s,
        Err(e) => {
            r.set("error", json!(e.to_string()));
            r.verdict("cone_defined", false);
            return Ok(r);
        }
    };
    let built = build_cone_3form(&alg, &s)?;
    r.set("rescale", json!(built.rescale));
    r.set("global_factor", json!(built.global_factor));
    r.set("homogeneous_weight", json!(built.form.homogeneous_weight()));
    let fg = fernandez_gray_check(&alg, &s)?;
    r.set("d_rho", json!(fg.d_rho));
    r.set("d_star_rho", json!(fg.d_star_rho));
    r.set("star_mismatch", json!(fg.star_mismatch));
    let rt = metric_roundtrip(&alg, &s)?;
    r.set("b_sign", json!(rt.stability.sign));
    r.set("stabilizer_dim", json!(rt.stability.stabilizer_dim));
    r.set("metric_ratio", json!(rt.ratio));
    r.set("metric_ratio_spread", json!(rt.spread));
    r.set("expected_ratio", json!(constants::cone_metric_ratio()));
    r.verdict("closed", fg.d_rho <= constants::TOL_STRUCTURE);
    r.verdict("coclosed", fg.d_star_rho <= constants::TOL_STRUCTURE);
    r.verdict("star_matches", fg.star_mismatch <= constants::TOL_IDENTITY);
    r.verdict("stable", rt.stability.definite && rt.stability.stabilizer_dim == 14);
    r.verdict("metric_proportional", rt.spread <= constants::TOL_STRUCTURE);
    Ok(r)
}

fn cmd_functional(m: &Manifest, gradient: bool, exec: Exec) -> Result<Report, InputError> {
    let mut r = Report::new();
    let alg = m.algebra()?;
    let j = require_j(m)?;
    r.set("psi", json!(psi_value(&alg, &j)));
    r.set("nondegenerate", json!(NijenhuisTensor::via_d(&alg, &j).is_nondegenerate()));
    if gradient {
        let (w, source) = hermitian(&alg, &j, m)?;
        r.set("omega_source", json!(source));
        let c = criticality_test(&alg, &j, &w, exec)?;
        r.set("gradient", json!(c.gradient));
        r.set("gradient_max", json!(c.gradient_max));
        r.set("mixed_residual", json!(c.residual));
        r.set("degenerate", json!(c.degenerate));
        r.set("kappa_conv", json!(constants::KAPPA_CONV));
        r.verdict("critical", c.critical);
        r.verdict("criticality_consistent", c.agrees);
    }
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn cmd_optimize(
    m: &Manifest,
    tol: f64,
    max_iter: usize,
    seed: Option<u64>,
    magnitude: f64,
    emit: Option<&str>,
    name: Option<&str>,
    exec: Exec,
) -> Result<Report, InputError> {
    let mut r = Report::new();
    let alg = m.algebra()?;
    let mut j = require_j(m)?;
    if let Some(seed) = seed {
        j = AlmostComplexStructure::new(perturbed_j(j.matrix(), seed, magnitude)?)?;
        r.set("seed", json!(seed));
        r.set("magnitude", json!(magnitude));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(InputError(format!("--tol must be positive, got {tol}")));
    }
    let opts = SearchOptions { tol, max_iter, exec, ..SearchOptions::default() };
    let s = find_critical(&alg, &j, &opts)?;
    r.set("status", json!(format!("{:?}", s.status)));
    r.set("iterations", json!(s.iterations));
    r.set("evaluations", json!(s.evaluations));
    r.set("residual", json!(s.residual));
    r.set("trace", json!(s.trace));
    r.set("psi", json!(s.psi));
    r.set("J", matrix_json(s.j.matrix()));
    r.verdict("converged", s.converged());
    r.verdict("trace_monotone", s.trace_is_monotone());
    if let Some(suite) = &s.suite {
        r.verdict("torsion", suite.torsion);
        r.verdict("structure_equations", suite.structure);
        r.verdict("nabla_omega", suite.nabla);
    }
    if let Some(path) = emit {
        let w = s.omega.as_ref().ok_or_else(|| InputError("no Hermitian form at the result; nothing to emit".into()))?;
        let big = SU3Structure::best_fit(&alg, &s.j, w).ok().map(|st| st.big_omega().clone());
        let metric = s.j.associated_metric(w);
        let out = Manifest::from_parts(
            name.unwrap_or(&format!("{}_critical", m.name)),
            &alg,
            Some(s.j.matrix()),
            Some(&metric),
            Some(w),
            big.as_ref(),
        );
        std::fs::write(path, out.to_json() + "\n").map_err(|e| InputError(format!("{path}: {e}")))?;
        r.set("emitted", json!(path));
    }
    Ok(r)
}

fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        format!("{x}")
    } else if (1e-3..1e6).contains(&x.abs()) {
        let digits = (5 - x.abs().log10().floor() as i32).max(0) as usize;
        format!("{x:.digits$}")
    } else {
        format!("{x:.5e}")
    }
}

fn human_value(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => fmt6(x),
            _ => n.to_string(),
        },
        Value::Array(a) => format!("[{}]", a.iter().map(human_value).collect::<Vec<_>>().join(", ")),
        Value::Object(o) => {
            format!("{{{}}}", o.iter().map(|(k, v)| format!("{k}: {}", human_value(v))).collect::<Vec<_>>().join(", "))
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render(cli: &Cli, argv: &[String], loaded: Option<&Loaded>, report: &Report, elapsed_ms: f64) -> String {
    if cli.json {
        let mut root = Map::new();
        root.insert("command".into(), json!(argv.iter().skip(1).collect::<Vec<_>>()));
        if let Some(l) = loaded {
            root.insert("manifest".into(), json!({ "name": l.manifest.name, "sha256": l.hash }));
        }
        root.insert("results".into(), Value::Object(report.results.clone()));
        root.insert("verdicts".into(), json!(report.verdicts));
        let consts: Map<String, Value> = constants::table().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        root.insert("constants".into(), Value::Object(consts));
        if cli.timing {
            root.insert("timing_ms".into(), json!(elapsed_ms));
        }
        serde_json::to_string_pretty(&Value::Object(root)).expect("report serializes") + "\n"
    } else {
        let mut out = String::new();
        if let Some(l) = loaded {
            out += &format!("manifest: {} (sha256 {})\n", l.manifest.name, &l.hash[..16]);
        }
        for (k, v) in &report.results {
            out += &format!("{k}: {}\n", human_value(v));
        }
        for (k, v) in &report.verdicts {
            out += &format!("verdict {k}: {}\n", if *v { "PASS" } else { "FAIL" });
        }
        if cli.timing {
            out += &format!("time: {} ms\n", fmt6(elapsed_ms));
        }
        out
    }
}

fn error_output(json_mode: bool, msg: &str) -> String {
    if json_mode {
        serde_json::to_string_pretty(&json!({ "error": msg })).expect("error serializes") + "\n"
    } else {
        format!("error: {msg}\n")
    }
}

/// Runs the command line `argv` (including the program name) and returns the
/// exit code and standard output.
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.render().to_string());
        }
    };
    if cli.threads > 0 && parallel_available() && !set_threads(cli.threads) {
        return (2, error_output(cli.json, "thread pool already initialized"));
    }
    let exec = Exec::default();
    let start = Instant::now();
    let input = match &cli.command {
        Command::Catalog { .. } => None,
        Command::Check { input }
        | Command::Nijenhuis { input }
        | Command::Torsion { input }
        | Command::Nk { input }
        | Command::Cone { input }
        | Command::Functional { input, .. }
        | Command::Optimize { input, .. } => Some(input.clone()),
    };
    let loaded = match input.as_deref().map(load).transpose() {
        Ok(l) => l,
        Err(e) => return (2, error_output(cli.json, &e.0)),
    };
    let result = match (&cli.command, &loaded) {
        (Command::Catalog { action: CatalogAction::List }, _) => {
            let mut r = Report::new();
            r.set("models", json!(catalog_names()));
            Ok(r)
        }
        (Command::Catalog { action: CatalogAction::Show { name } }, _) => {
            return match catalog(name) {
                Ok(m) => (0, m.to_json() + "\n"),
                Err(e) => (2, error_output(cli.json, &e.to_string())),
            };
        }
        (Command::Check { .. }, Some(l)) => cmd_check(&l.manifest),
        (Command::Nijenhuis { .. }, Some(l)) => cmd_nijenhuis(&l.manifest),
        (Command::Torsion { .. }, Some(l)) => cmd_torsion(&l.manifest),
        (Command::Nk { .. }, Some(l)) => cmd_nk(&l.manifest),
        (Command::Cone { .. }, Some(l)) => cmd_cone(&l.manifest),
        (Command::Functional { gradient, .. }, Some(l)) => cmd_functional(&l.manifest, *gradient, exec),
        (Command::Optimize { tol, max_iter, seed, magnitude, emit, name, .. }, Some(l)) => {
            cmd_optimize(&l.manifest, *tol, *max_iter, *seed, *magnitude, emit.as_deref(), name.as_deref(), exec)
        }
        _ => unreachable!("every manifest command has loaded input"),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => return (2, error_output(cli.json, &e.0)),
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let code = if report.verdicts.values().all(|&v| v) { 0 } else { 1 };
    (code, render(&cli, &argv, loaded.as_ref(), &report, elapsed_ms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_digit_formatting() {
        assert_eq!(fmt6(0.001953125), "0.00195312");
        assert_eq!(fmt6(1.0), "1.00000");
        assert_eq!(fmt6(123456.7), "123457");
        assert_eq!(fmt6(1e-9), "1.00000e-9");
        assert_eq!(fmt6(0.0), "0");
    }

    #[test]
    fn hex_encoding() {
        assert_eq!(hex(&[0, 15, 255]), "000fff");
    }

    #[test]
    fn catalog_reference_loads() {
        let l = load("catalog:s3s3").unwrap();
        assert_eq!(l.manifest.name, "s3s3");
        assert_eq!(l.hash.len(), 64);
        assert!(load("catalog:nope").is_err());
    }
}
