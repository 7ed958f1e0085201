//! Acceptance suite: one PASS/FAIL line per criterion, each threshold pinned
//! independently of the tolerance ladder used inside the suites. Runs without
//! the libtest harness so the lines always reach the output.

use std::collections::BTreeMap;
use std::process::Command;

use projtract::report::CheckReport;
use projtract::suites::SuiteOptions;
use projtract_cli::{list_registry, run_scenario};

type Checks = BTreeMap<String, CheckReport>;

fn run(id: &str, suites: &[&str]) -> Checks {
    let sel: Vec<String> = suites.iter().map(|s| s.to_string()).collect();
    run_scenario(id, &sel, &SuiteOptions::default())
        .unwrap_or_else(|e| panic!("{id}: {e}"))
        .into_iter()
        .map(|c| (c.check.clone(), c))
        .collect()
}

fn detail(c: &CheckReport, key: &str) -> Option<f64> {
    c.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

/// Collects failures for one criterion.
struct Criterion {
    failures: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Criterion { failures: Vec::new() }
    }

    /// The check exists, passes its own tolerance and its max is within `bound`.
    fn bounded(&mut self, sc: &str, checks: &Checks, name: &str, bound: f64) {
        match checks.get(name) {
            None => self.failures.push(format!("{sc}: {name} missing")),
            Some(c) if !c.pass || !(c.max <= bound) => {
                self.failures.push(format!("{sc}: {name} max {:e} (bound {bound:e}, pass {})", c.max, c.pass))
            }
            _ => {}
        }
    }

    fn passes(&mut self, sc: &str, checks: &Checks, name: &str) {
        match checks.get(name) {
            Some(c) if c.pass => {}
            Some(c) => self.failures.push(format!("{sc}: {name} failed (max {:e})", c.max)),
            None => self.failures.push(format!("{sc}: {name} missing")),
        }
    }

    fn require(&mut self, ok: bool, what: String) {
        if !ok {
            self.failures.push(what);
        }
    }
}

fn affine_identities() -> Criterion {
    let mut c = Criterion::new();
    for sc in ["flat(3)", "round_sphere(3)", "round_sphere(5)", "perturbed(3)"] {
        let r = run(sc, &["affine"]);
        for name in ["affine.bianchi", "affine.decomposition", "affine.weyl_trace_free", "affine.beta"] {
            c.bounded(sc, &r, name, 1e-8);
        }
        c.bounded(sc, &r, "affine.differential_bianchi", 1e-6);
    }
    c
}

fn projective_invariance() -> Criterion {
    let mut c = Criterion::new();
    for sc in ["flat(3)", "round_sphere(3)", "round_sphere(5)", "perturbed(3)"] {
        let r = run(sc, &["projective"]);
        c.bounded(sc, &r, "projective.weyl_invariance", 1e-9);
        if let Some(w) = r.get("projective.weyl_invariance") {
            c.require(detail(w, "changes") == Some(10.0), format!("{sc}: expected 10 projective changes"));
        }
        c.bounded(sc, &r, "projective.density_law", 1e-10);
    }
    c
}

fn sasaki_einstein() -> Criterion {
    let mut c = Criterion::new();
    let sc = "round_sphere(5)";
    let r = run(sc, &["sasaki"]);
    for name in r.keys().filter(|k| k.starts_with("sasaki.")) {
        c.bounded(sc, &r, name, 1e-8);
    }
    c.require(r.contains_key("sasaki.curvature_condition"), format!("{sc}: Sasaki criteria missing"));
    c.bounded(sc, &r, "einstein.ric_minus_2m_g", 1e-9);
    c.bounded(sc, &r, "hermitian.j_squared", 1e-10);
    for f in ["h", "omega", "j"] {
        c.bounded(sc, &r, &format!("parallel.{f}.fd"), 1e-7);
    }
    c.bounded(sc, &r, "holonomy.preserves_h", 1e-6);
    c.bounded(sc, &r, "holonomy.preserves_omega", 1e-6);
    c.passes(sc, &r, "hermitian.signature");
    if let Some(s) = r.get("hermitian.signature") {
        let sig = (detail(s, "positive"), detail(s, "negative"));
        c.require(sig == (Some(6.0), Some(0.0)), format!("{sc}: signature {sig:?}, expected (6,0)"));
    }
    c
}

fn prolongation() -> Criterion {
    let mut c = Criterion::new();
    let sc = "round_sphere(5)";
    let r = run(sc, &["bgg"]);
    for name in ["bgg.prolongation_parallel", "bgg.killing", "bgg.killing_normality", "bgg.adjoint_normality"] {
        c.bounded(sc, &r, name, 1e-8);
    }
    c
}

fn orbit_decomposition() -> Criterion {
    let mut c = Criterion::new();
    let sc = "flat_model_hermitian(2,2)";
    let r = run(sc, &["orbits"]);
    c.passes(sc, &r, "orbits.labels_present");
    if let Some(l) = r.get("orbits.labels_present") {
        for label in ["plus", "zero", "minus"] {
            c.require(detail(l, label).is_some_and(|v| v > 0.0), format!("{sc}: no {label} orbit sample"));
        }
    }
    c.passes(sc, &r, "orbits.boundary_gradient");
    if let Some(g) = r.get("orbits.boundary_gradient") {
        c.require(detail(g, "min_grad").is_some_and(|v| v >= 1e-6), format!("{sc}: |∇τ| too small on M₀"));
    }
    c.bounded(sc, &r, "orbits.einstein", 1e-6);
    c.passes(sc, &r, "orbits.open_signature");
    c.passes(sc, &r, "orbits.boundary_signature");
    c.passes(sc, &r, "orbits.compactification_converges");
    c.passes(sc, &r, "orbits.control_diverges");
    for name in ["orbits.k_tangency", "orbits.k_nullity", "orbits.k_conformal_killing"] {
        c.bounded(sc, &r, name, 1e-7);
    }
    c
}

fn contact_geometry() -> Criterion {
    let mut c = Criterion::new();
    let r3 = run("standard_contact_r3", &["contact"]);
    c.bounded("standard_contact_r3", &r3, "contact.reeb", 1e-10);
    c.bounded("standard_contact_r3", &r3, "contact.reeb_inverse", 1e-10);
    c.bounded("standard_contact_r3", &r3, "contact.torsion_dim3", 1e-10);
    let s5 = run("round_sphere(5)", &["contact"]);
    for name in ["contact.torsion", "contact.distinguished_a", "contact.distinguished_b", "contact.distinguished_c"] {
        c.bounded("round_sphere(5)", &s5, name, 1e-8);
    }
    let h = run("heisenberg_contact(2)", &["contact"]);
    c.bounded("heisenberg_contact(2)", &h, "contact.extension_symmetries", 1e-9);
    c.bounded("heisenberg_contact(2)", &h, "contact.torsion_symmetries", 1e-9);
    c.bounded("heisenberg_contact(2)", &h, "contact.torsion_scale_independence", 1e-8);
    c
}

fn leaf_space() -> Criterion {
    let mut c = Criterion::new();
    for sc in ["round_sphere(3)", "round_sphere(5)"] {
        let r = run(sc, &["leafspace"]);
        c.bounded(sc, &r, "leafspace.d_omega", 1e-7);
        c.bounded(sc, &r, "leafspace.nijenhuis", 1e-7);
        c.bounded(sc, &r, "leafspace.einstein", 1e-6);
        c.bounded(sc, &r, "leafspace.split_system", 1e-7);
        c.bounded(sc, &r, "leafspace.fefferman", 1e-7);
        c.bounded(sc, &r, "leafspace.c_projective_change", 1e-7);
    }
    c
}

fn ambient_metric() -> Criterion {
    let mut c = Criterion::new();
    for sc in ["sphere_ambient(2)", "sphere_ambient(3)"] {
        let r = run(sc, &["ambient"]);
        c.bounded(sc, &r, "ambient.monge_ampere", 1e-12);
        if let Some(m) = r.get("ambient.monge_ampere") {
            c.require(m.count >= 100, format!("{sc}: only {} Monge–Ampère points", m.count));
        }
        c.bounded(sc, &r, "ambient.ricci_flat", 1e-6);
        c.bounded(sc, &r, "ambient.ricci_log_k", 1e-6);
        c.bounded(sc, &r, "ambient.closed", 1e-10);
    }
    c
}

fn oracles() -> Criterion {
    let mut c = Criterion::new();
    let step = SuiteOptions::default().fd_step;
    c.require(step == 1e-5, format!("default FD step {step:e}"));
    for d in list_registry() {
        let r = run(&d.id, &["oracle"]);
        let fields: Vec<&String> = r.keys().filter(|k| k.starts_with("oracle.ad_fd.")).collect();
        c.require(!fields.is_empty(), format!("{}: no AD/FD fields", d.id));
        for name in fields {
            c.bounded(&d.id, &r, name, 10.0 * step * step);
        }
        if d.id.starts_with("sphere_ambient") {
            continue;
        }
        match r.get("oracle.rk4_richardson") {
            None => c.require(false, format!("{}: Richardson check missing", d.id)),
            Some(rk) => {
                c.passes(&d.id, &r, "oracle.rk4_richardson");
                let exact = detail(rk, "exact").unwrap_or(0.0);
                if exact < rk.count as f64 {
                    let lo = detail(rk, "ratio_min").unwrap_or(f64::NAN);
                    let hi = detail(rk, "ratio_max").unwrap_or(f64::NAN);
                    c.require(lo >= 12.0 && hi <= 20.0, format!("{}: Richardson ratios [{lo}, {hi}]", d.id));
                }
            }
        }
    }
    c
}

fn determinism() -> Criterion {
    let mut c = Criterion::new();
    let dir = std::env::temp_dir().join(format!("projtract-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.join(format!("run{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_projtract"))
            .args(["analyze", "--scenario", "round_sphere(3)", "--scenario", "flat_model_hermitian(2,1)"])
            .args(["--points", "40", "--seed", "7", "--out"])
            .arg(&out)
            .status()
            .expect("binary runs");
        c.require(status.code() == Some(0), format!("run {i} exited with {status}"));
        outputs.push(std::fs::read(&out).unwrap_or_default());
    }
    c.require(!outputs[0].is_empty() && outputs[0] == outputs[1], "reports differ between identical runs".into());
    let _ = std::fs::remove_dir_all(&dir);
    c
}

fn main() {
    let criteria: [(&str, fn() -> Criterion); 10] = [
        ("affine identities", affine_identities),
        ("projective invariance", projective_invariance),
        ("Sasaki-Einstein round S^5", sasaki_einstein),
        ("prolongation equivalence", prolongation),
        ("flat model orbit decomposition", orbit_decomposition),
        ("contact geometry", contact_geometry),
        ("leaf space", leaf_space),
        ("ambient metric", ambient_metric),
        ("oracle cross-validation", oracles),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        let c = f();
        let verdict = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} ({:.1} s)", i + 1, t.elapsed().as_secs_f64());
        for msg in &c.failures {
            println!("    {msg}");
        }
        if !c.failures.is_empty() {
            failed.push(i + 1);
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
