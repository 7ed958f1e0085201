//! Scenario registry, suite dispatch and report documents for the `projtract` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use projtract::affine::LeviCivita;
use projtract::ambient::{AmbientPotential, ComplexHessian, CrPotential};
use projtract::contact::UnitScale;
use projtract::hermitian::{HermitianField, HermitianPart};
use projtract::jets::{ChartBox, Point};
use projtract::models::{
    ConnectionModel, ContactModel, FlatModel, FlatModelBilinear, FlatModelEndo, FlatModelK, HeisenbergTorsion,
    LoweredWeighted, MetricModel, ScaleDensity, TrigField, VectorModel,
};
use projtract::orbits::TauField;
use projtract::report::CheckReport;
use projtract::suites::{self, SuiteOptions};
use projtract::tractor::TractorSplitting;
use projtract::{GeomError, Result};

/// Every suite name known to the dispatcher.
pub const SUITES: [&str; 11] =
    ["affine", "ambient", "bgg", "contact", "hermitian", "leafspace", "oracle", "orbits", "projective", "sasaki", "tractor"];

/// A registered scenario: a chart, its field providers and the suites that apply.
#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    /// Euclidean `ℝ^n`.
    Flat(usize),
    /// Unit `S^{2m+1}` in Hopf coordinates with its Reeb field.
    RoundSphere(usize),
    /// A non-Einstein metric on `ℝ³` with nonzero Weyl tensor.
    Perturbed,
    /// The flat model `ℝP^{p+q−1}` of a tractor metric of signature `(p, q)`.
    FlatModelHermitian(FlatModel),
    /// Ambient potential of the unit sphere in `ℂ^m`.
    SphereAmbient(usize),
    StandardContactR3,
    HeisenbergContact(usize),
}

/// Public description of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    pub id: String,
    pub dim: usize,
    pub chart_lo: Vec<f64>,
    pub chart_hi: Vec<f64>,
    pub providers: Vec<String>,
    pub suites: Vec<String>,
    pub default_suites: Vec<String>,
}

fn parse_args(id: &str) -> Option<(&str, Vec<usize>)> {
    match id.find('(') {
        None => Some((id, Vec::new())),
        Some(i) => {
            let inner = id[i + 1..].strip_suffix(')')?;
            let args: std::result::Result<Vec<usize>, _> = inner.split(',').map(|s| s.trim().parse::<usize>()).collect();
            Some((&id[..i], args.ok()?))
        }
    }
}

impl Scenario {
    pub fn parse(id: &str) -> Result<Self> {
        let unknown = || GeomError::UnknownScenario(id.to_string());
        let (name, args) = parse_args(id.trim()).ok_or_else(unknown)?;
        let s = match (name, args.as_slice()) {
            ("flat", [n]) if *n >= 2 => Scenario::Flat(*n),
            ("round_sphere", [n]) if *n >= 3 && n % 2 == 1 => Scenario::RoundSphere((n - 1) / 2),
            ("perturbed", [3]) => Scenario::Perturbed,
            ("flat_model_hermitian", [p, q]) if p + q >= 3 => Scenario::FlatModelHermitian(FlatModel { p: *p, q: *q }),
            ("sphere_ambient", [m]) if *m >= 1 => Scenario::SphereAmbient(*m),
            ("standard_contact_r3", []) => Scenario::StandardContactR3,
            ("heisenberg_contact", [m]) if *m >= 1 => Scenario::HeisenbergContact(*m),
            _ => return Err(unknown()),
        };
        Ok(s)
    }

    pub fn id(&self) -> String {
        match self {
            Scenario::Flat(n) => format!("flat({n})"),
            Scenario::RoundSphere(m) => format!("round_sphere({})", 2 * m + 1),
            Scenario::Perturbed => "perturbed(3)".into(),
            Scenario::FlatModelHermitian(f) => format!("flat_model_hermitian({},{})", f.p, f.q),
            Scenario::SphereAmbient(m) => format!("sphere_ambient({m})"),
            Scenario::StandardContactR3 => "standard_contact_r3".into(),
            Scenario::HeisenbergContact(m) => format!("heisenberg_contact({m})"),
        }
    }

    /// Chart dimension.
    pub fn dim(&self) -> usize {
        match self {
            Scenario::Flat(n) => *n,
            Scenario::RoundSphere(m) | Scenario::HeisenbergContact(m) => 2 * m + 1,
            Scenario::Perturbed | Scenario::StandardContactR3 => 3,
            Scenario::FlatModelHermitian(f) => f.dim(),
            Scenario::SphereAmbient(m) => 2 * m + 2,
        }
    }

    pub fn domain(&self) -> ChartBox {
        let n = self.dim();
        match self {
            Scenario::Flat(_) | Scenario::Perturbed | Scenario::HeisenbergContact(_) => ChartBox::cube(n, 1.0),
            Scenario::RoundSphere(_) => {
                let mut lo = vec![-0.8; n];
                let mut hi = vec![0.8; n];
                lo[n - 1] = -3.0;
                hi[n - 1] = 3.0;
                ChartBox::new(lo, hi)
            }
            Scenario::FlatModelHermitian(_) => ChartBox::cube(n, 2.0),
            Scenario::SphereAmbient(_) => {
                // z₀ away from 0, |z| inside the unit ball
                let mut lo = vec![-0.5; n];
                let mut hi = vec![0.5; n];
                lo[0] = 0.5;
                hi[0] = 1.5;
                ChartBox::new(lo, hi)
            }
            Scenario::StandardContactR3 => ChartBox::cube(3, 1.5),
        }
    }

    fn metric(&self) -> Option<MetricModel> {
        match self {
            Scenario::Flat(n) => Some(MetricModel::Euclidean(*n)),
            Scenario::RoundSphere(m) => Some(MetricModel::HopfSphere(*m)),
            Scenario::Perturbed => Some(MetricModel::Perturbed3),
            _ => None,
        }
    }

    /// The vector field `k`: the Reeb field on spheres, the last coordinate field otherwise.
    fn k(&self) -> Option<VectorModel> {
        let n = self.dim();
        self.metric().map(|_| VectorModel::Coordinate { n, i: n - 1, c: 1.0 })
    }

    fn connection(&self) -> Option<ConnectionModel> {
        match self {
            Scenario::FlatModelHermitian(f) => Some(ConnectionModel::Flat(f.dim())),
            Scenario::StandardContactR3 | Scenario::HeisenbergContact(_) => {
                let form = self.contact_form()?;
                let n = self.dim();
                Some(ConnectionModel::ContactCompatible(form, Some(TrigField::random(n, n * n * n, 0.3, CONTACT_SEED))))
            }
            _ => self.metric().map(ConnectionModel::LeviCivita),
        }
    }

    fn contact_form(&self) -> Option<ContactModel> {
        match self {
            Scenario::StandardContactR3 => Some(ContactModel::StandardR3),
            Scenario::HeisenbergContact(m) => Some(ContactModel::Heisenberg(*m)),
            _ => None,
        }
    }

    pub fn providers(&self) -> Vec<String> {
        let v: &[&str] = match self {
            Scenario::Flat(_) | Scenario::Perturbed => &["metric", "connection", "k"],
            Scenario::RoundSphere(_) => &["metric", "connection", "k", "h", "omega", "j"],
            Scenario::FlatModelHermitian(f) if f.is_hermitian() => &["connection", "h", "omega", "j", "k"],
            Scenario::FlatModelHermitian(_) => &["connection", "h"],
            Scenario::SphereAmbient(_) => &["u", "ambient_metric"],
            Scenario::StandardContactR3 | Scenario::HeisenbergContact(_) => &["contact_form", "connection"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Suites that apply to this scenario.
    pub fn suites(&self) -> Vec<&'static str> {
        match self {
            Scenario::Flat(_) | Scenario::Perturbed => vec!["affine", "bgg", "oracle", "projective", "sasaki", "tractor"],
            Scenario::RoundSphere(_) => {
                vec!["affine", "bgg", "contact", "leafspace", "oracle", "projective", "sasaki", "tractor"]
            }
            Scenario::FlatModelHermitian(f) => {
                let mut v = vec!["affine", "oracle", "orbits", "projective", "tractor"];
                if f.is_hermitian() {
                    v.extend(["contact", "hermitian"]);
                }
                v.sort_unstable();
                v
            }
            Scenario::SphereAmbient(_) => vec!["ambient", "oracle"],
            Scenario::StandardContactR3 | Scenario::HeisenbergContact(_) => vec!["contact", "oracle"],
        }
    }

    /// Suites run when none are requested: the applicable ones, except the
    /// Sasaki and BGG suites on scenarios without a Killing Reeb field.
    pub fn default_suites(&self) -> Vec<&'static str> {
        match self {
            Scenario::Flat(_) | Scenario::Perturbed => vec!["affine", "oracle", "projective", "tractor"],
            _ => self.suites(),
        }
    }

    pub fn descriptor(&self) -> ScenarioDescriptor {
        let d = self.domain();
        ScenarioDescriptor {
            id: self.id(),
            dim: self.dim(),
            chart_lo: d.lo.clone(),
            chart_hi: d.hi.clone(),
            providers: self.providers(),
            suites: self.suites().iter().map(|s| s.to_string()).collect(),
            default_suites: self.default_suites().iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Seed of the generic part of the compatible connection on contact scenarios.
pub const CONTACT_SEED: u64 = 11;

/// The shipped registry.
pub fn list_registry() -> Vec<ScenarioDescriptor> {
    let mut v = vec![
        Scenario::Flat(3),
        Scenario::Flat(4),
        Scenario::RoundSphere(1),
        Scenario::RoundSphere(2),
        Scenario::Perturbed,
    ];
    for (p, q) in [(2, 1), (1, 2), (2, 2), (3, 0), (4, 2)] {
        v.push(Scenario::FlatModelHermitian(FlatModel { p, q }));
    }
    v.extend([Scenario::SphereAmbient(2), Scenario::SphereAmbient(3), Scenario::StandardContactR3, Scenario::HeisenbergContact(2)]);
    v.iter().map(Scenario::descriptor).collect()
}

/// Seeded sample points of a scenario.
pub fn sample_points(sc: &Scenario, opts: &SuiteOptions) -> Vec<Point> {
    sc.domain().sample(opts.points, opts.seed)
}

fn suite_of_check(sc: &Scenario, check: &str) -> Option<&'static str> {
    let prefix = check.split('.').next()?;
    let flat_model = matches!(sc, Scenario::FlatModelHermitian(_));
    let s = match prefix {
        "einstein" | "sasaki" => "sasaki",
        "parallel" | "hermitian" | "holonomy" => {
            if flat_model {
                "hermitian"
            } else {
                "sasaki"
            }
        }
        p => SUITES.iter().find(|s| **s == p)?,
    };
    Some(s)
}

/// Runs the selected suites (or single check ids) on one scenario; an empty
/// selection runs the scenario's default suites. Reports are sorted by check id.
pub fn run_scenario(id: &str, selection: &[String], opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let sc = Scenario::parse(id)?;
    let applicable = sc.suites();
    let mut wanted_suites: Vec<&'static str> = Vec::new();
    let mut wanted_checks: Vec<&str> = Vec::new();
    let mut whole: Vec<&'static str> = Vec::new();
    if selection.is_empty() {
        whole = sc.default_suites();
        wanted_suites = whole.clone();
    }
    for item in selection {
        let item = item.as_str();
        let suite = if let Some(s) = SUITES.iter().find(|s| **s == item) {
            whole.push(s);
            *s
        } else if item.contains('.') {
            wanted_checks.push(item);
            suite_of_check(&sc, item).ok_or_else(|| GeomError::UnknownCheck(item.to_string()))?
        } else {
            return Err(GeomError::UnknownCheck(item.to_string()));
        };
        if !applicable.contains(&suite) {
            return Err(GeomError::UnknownCheck(format!("{item} (suite '{suite}' does not apply to {})", sc.id())));
        }
        if !wanted_suites.contains(&suite) {
            wanted_suites.push(suite);
        }
    }
    wanted_suites.sort_unstable();
    let points = sample_points(&sc, opts);
    let mut by_name: BTreeMap<String, CheckReport> = BTreeMap::new();
    for suite in &wanted_suites {
        for rep in run_suite(&sc, suite, &points, opts)? {
            if whole.contains(suite) || wanted_checks.contains(&rep.check.as_str()) {
                by_name.entry(rep.check.clone()).or_insert(rep);
            }
        }
    }
    for c in wanted_checks {
        if !by_name.contains_key(c) {
            return Err(GeomError::UnknownCheck(c.to_string()));
        }
    }
    Ok(by_name.into_values().collect())
}

fn run_suite(sc: &Scenario, suite: &str, points: &[Point], opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let dom = sc.domain();
    let tol = &opts.tol;
    let metric = sc.metric();
    let k = sc.k();
    let conn = sc.connection();
    let need = |v: Option<()>| v.ok_or_else(|| GeomError::UnknownCheck(format!("{suite} on {}", sc.id())));
    match (suite, sc) {
        ("affine", _) => {
            let c = conn.ok_or_else(|| GeomError::UnknownCheck(format!("affine on {}", sc.id())))?;
            let mut out = suites::affine_suite(&c, &dom, points, tol)?;
            if let Some(m) = &metric {
                out.extend(suites::metric_suite(m, &dom, points, tol)?);
            }
            Ok(out)
        }
        ("projective", _) => {
            let c = conn.ok_or_else(|| GeomError::UnknownCheck(format!("projective on {}", sc.id())))?;
            suites::projective_suite(&c, &dom, points, opts.seed, tol)
        }
        ("tractor", _) => {
            let c = conn.ok_or_else(|| GeomError::UnknownCheck(format!("tractor on {}", sc.id())))?;
            suites::tractor_suite(&TractorSplitting::new(c, dom.clone()), points, opts.seed, tol)
        }
        ("sasaki", _) => {
            need(metric.as_ref().map(|_| ()))?;
            suites::sasaki_suite(metric.as_ref().unwrap(), k.as_ref().unwrap(), &dom, points, opts)
        }
        ("bgg", _) => {
            need(metric.as_ref().map(|_| ()))?;
            suites::bgg_suite(metric.as_ref().unwrap(), k.as_ref().unwrap(), &dom, points, opts)
        }
        ("leafspace", Scenario::RoundSphere(_)) => {
            suites::leafspace_suite(metric.as_ref().unwrap(), k.as_ref().unwrap(), &dom, points, opts)
        }
        ("contact", Scenario::RoundSphere(_)) => {
            suites::sasaki_contact_suite(metric.as_ref().unwrap(), k.as_ref().unwrap(), &dom, points, opts)
        }
        ("contact", Scenario::StandardContactR3 | Scenario::HeisenbergContact(_)) => {
            suites::contact_model_suite(sc.contact_form().unwrap(), points, CONTACT_SEED, tol)
        }
        ("contact", Scenario::FlatModelHermitian(f)) => suites::flat_contact_suite(*f, points, opts),
        ("hermitian", Scenario::FlatModelHermitian(f)) => suites::flat_hermitian_suite(*f, points, opts),
        ("orbits", Scenario::FlatModelHermitian(f)) => suites::orbits_suite(*f, points, opts),
        ("ambient", Scenario::SphereAmbient(m)) => suites::ambient_suite(*m, points, tol),
        ("oracle", _) => oracle_suite(sc, points, opts),
        _ => Err(GeomError::UnknownCheck(format!("{suite} on {}", sc.id()))),
    }
}

/// AD-versus-FD on every provider of the scenario, plus the RK4 order check.
fn oracle_suite(sc: &Scenario, points: &[Point], opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let dom = sc.domain();
    let h = opts.fd_step;
    let mut out = Vec::new();
    let mut add = |r: Result<CheckReport>| r.map(|c| out.push(c));
    if let (Some(m), Some(k)) = (sc.metric(), sc.k()) {
        add(suites::ad_fd_check("metric", &m, &dom, points, h, 3))?;
        add(suites::ad_fd_check("connection", &LeviCivita(m.clone()), &dom, points, h, 2))?;
        add(suites::ad_fd_check("k", &k, &dom, points, h, 2))?;
        let kl = LoweredWeighted { metric: m.clone(), vector: k.clone(), weight: 2.0 };
        add(suites::ad_fd_check("k_lowered", &kl, &dom, points, h, 2))?;
        add(suites::ad_fd_check("scale", &ScaleDensity { metric: m.clone(), weight: 2.0 }, &dom, points, h, 2))?;
        if matches!(sc, Scenario::RoundSphere(_)) {
            for (name, part) in [("h", HermitianPart::Metric), ("omega", HermitianPart::TwoForm), ("j", HermitianPart::ComplexStructure)] {
                let f = HermitianField { metric: m.clone(), k: k.clone(), part };
                add(suites::ad_fd_check(name, &f, &dom, points, h, 1))?;
            }
        }
    }
    match sc {
        Scenario::FlatModelHermitian(f) => {
            let hf = FlatModelBilinear { model: *f, form: f.h0() };
            add(suites::ad_fd_check("h", &hf, &dom, points, h, 2))?;
            add(suites::ad_fd_check("tau", &TauField(hf.clone()), &dom, points, h, 2))?;
            if let (Some(j0), Some(om0)) = (f.j0(), f.omega0()) {
                add(suites::ad_fd_check("omega", &FlatModelBilinear { model: *f, form: om0 }, &dom, points, h, 2))?;
                add(suites::ad_fd_check("j", &FlatModelEndo { model: *f, endo: j0 }, &dom, points, h, 2))?;
                add(suites::ad_fd_check("k", &FlatModelK(*f), &dom, points, h, 2))?;
            }
        }
        Scenario::SphereAmbient(m) => {
            let u = CrPotential::Sphere { m: *m, c: 1.0 };
            let sub = ChartBox::new(dom.lo[2..].to_vec(), dom.hi[2..].to_vec());
            let upts: Vec<Point> = points.iter().map(|p| Point::new(p.coords[2..].to_vec())).collect();
            add(suites::ad_fd_check("u", &u, &sub, &upts, h, 3))?;
            add(suites::ad_fd_check("ambient_potential", &AmbientPotential(u.clone()), &dom, points, h, 3))?;
            add(suites::ad_fd_check("ambient_metric", &ComplexHessian(AmbientPotential(u)), &dom, points, h, 1))?;
        }
        Scenario::StandardContactR3 | Scenario::HeisenbergContact(_) => {
            let form = sc.contact_form().unwrap();
            add(suites::ad_fd_check("contact_form", &form, &dom, points, h, 2))?;
            add(suites::ad_fd_check("connection", &sc.connection().unwrap(), &dom, points, h, 2))?;
            add(suites::ad_fd_check("unit_scale", &UnitScale(sc.dim()), &dom, points, h, 2))?;
            if let Scenario::HeisenbergContact(m) = sc {
                add(suites::ad_fd_check("synthetic_torsion", &HeisenbergTorsion::random(*m, 0.7, CONTACT_SEED + 3), &dom, points, h, 2))?;
            }
        }
        _ => {}
    }
    if let Some(c) = sc.connection() {
        add(suites::richardson_check(&TractorSplitting::new(c, dom.clone()), opts.seed, opts.ode_steps))?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// report documents

pub const REPORT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub command: String,
    pub scenarios: Vec<String>,
    pub suites: Vec<String>,
    pub points: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub ode_steps: usize,
    pub tol_alg: f64,
    pub tol_d1: f64,
    pub tol_d2: f64,
}

impl Invocation {
    pub fn new(scenarios: &[String], suites: &[String], opts: &SuiteOptions) -> Self {
        Invocation {
            command: "analyze".into(),
            scenarios: scenarios.to_vec(),
            suites: suites.to_vec(),
            points: opts.points,
            seed: opts.seed,
            fd_step: opts.fd_step,
            ode_steps: opts.ode_steps,
            tol_alg: opts.tol.alg,
            tol_d1: opts.tol.d1,
            tol_d2: opts.tol.d2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub id: String,
    pub checks: Vec<CheckReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub invocation: Invocation,
    pub scenarios: Vec<ScenarioReport>,
}

impl ReportDocument {
    /// Sorts scenarios and checks lexicographically; rejects empty reports.
    pub fn new(invocation: Invocation, mut scenarios: Vec<ScenarioReport>) -> Result<Self> {
        if scenarios.iter().all(|s| s.checks.is_empty()) {
            return Err(GeomError::InvalidArgument("report contains no checks".into()));
        }
        scenarios.sort_by(|a, b| a.id.cmp(&b.id));
        for s in &mut scenarios {
            s.checks.sort_by(|a, b| a.check.cmp(&b.check));
        }
        Ok(ReportDocument { version: REPORT_VERSION.into(), invocation, scenarios })
    }

    pub fn all_pass(&self) -> bool {
        self.scenarios.iter().flat_map(|s| &s.checks).all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.scenarios {
            for c in &s.checks {
                let _ = writeln!(
                    out,
                    "{:<4} {:<28} {:<40} max={:.3e} tol={:.1e} n={}",
                    if c.pass { "PASS" } else { "FAIL" },
                    s.id,
                    c.check,
                    c.max,
                    c.tolerance,
                    c.count
                );
            }
        }
        let total = self.scenarios.iter().map(|s| s.checks.len()).sum::<usize>();
        let failed = self.scenarios.iter().flat_map(|s| &s.checks).filter(|c| !c.pass).count();
        let _ = writeln!(out, "{} checks, {} failed", total, failed);
        out
    }
}

/// JSON formatter writing every finite float with 17 significant digits.
struct SigDigits(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serialises a document; numbers are decimal with 17 significant digits.
pub fn render_report(doc: &ReportDocument) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits(serde_json::ser::PrettyFormatter::new()));
    doc.serialize(&mut ser).map_err(|e| GeomError::IoFailure(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| GeomError::IoFailure(e.to_string()))
}

/// Writes a document to `path`, or to stdout when `path` is `None`.
pub fn emit_report(doc: &ReportDocument, path: Option<&std::path::Path>) -> Result<()> {
    let text = render_report(doc)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| GeomError::IoFailure(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| GeomError::IoFailure(e.to_string())),
    }
}

pub fn parse_report(text: &str) -> Result<ReportDocument> {
    serde_json::from_str(text).map_err(|e| GeomError::IoFailure(format!("malformed report: {e}")))
}

/// Scenario id from a `key=value` configuration file naming a built-in
/// family (`family=round_sphere`, `n=5`; `family=flat_model_hermitian`, `p=2`, `q=2`; …).
pub fn scenario_from_config(text: &str) -> Result<String> {
    let mut kv = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| GeomError::InvalidArgument(format!("line {}: expected key=value", i + 1)))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let family = kv.remove("family").ok_or_else(|| GeomError::InvalidArgument("missing 'family'".into()))?;
    let arg = |k: &str, kv: &BTreeMap<String, String>| {
        kv.get(k).cloned().ok_or_else(|| GeomError::InvalidArgument(format!("family {family} needs '{k}'")))
    };
    let id = match family.as_str() {
        "flat" | "round_sphere" | "perturbed" => format!("{family}({})", arg("n", &kv)?),
        "sphere_ambient" | "heisenberg_contact" => format!("{family}({})", arg("m", &kv)?),
        "flat_model_hermitian" => format!("{family}({},{})", arg("p", &kv)?, arg("q", &kv)?),
        "standard_contact_r3" => family.clone(),
        _ => return Err(GeomError::UnknownScenario(family)),
    };
    Scenario::parse(&id)?;
    Ok(id)
}
