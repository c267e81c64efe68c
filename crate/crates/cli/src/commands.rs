use std::collections::BTreeMap;

use mdisp::impedance::{
    assemble_condition, boundary_operator, cayley_kz, classify_operator, fk_extensions,
    BoundaryCondition, ImpedanceSpec, RestrictedDomain,
};
use mdisp::linalg::{hermitian_part, max_abs, min_eigenvalue, spectral_norm};
use mdisp::linrel::{cayley, classify_relation, inverse_cayley, resolvent_iso};
use mdisp::maxwell1d::{
    build_generator_with, default_lambda_grid, discrete_green_residual, evolve_cn, gaussian_pulse,
    green_identity, spectrum, BoundarySpec, GreenCase, Maxwell1D, ResolventProbe, Sbp,
};
use mdisp::scalar::{CMat, C};
use mdisp::suite::{criterion_name, run_criterion, CriterionReport, SuiteName, SuiteOptions};
use mdisp::tracespace::{
    build_surface, hodge_basis_with_tolerance, surface_info, HodgeBasis, SurfaceModel,
};
use serde_json::{json, Value};

use crate::args::{
    BcArgs, ClassifyArgs, EvolveArgs, ExtendArgs, ExtensionMethod, GreenArgs, MediumArgs,
    RangeArgs, RelationCheckArgs, RelationProperty, SuiteArgs, SurfaceArgs, SurfaceInfoArgs,
};
use crate::config::{tolerances, CliError, CliResult};
use crate::parse;
use crate::report::{complex, matrix, real_table, Checks};

/// What a command hands back to the driver.
pub struct Outcome {
    pub result: Value,
    pub checks: Checks,
    pub tolerances: BTreeMap<String, f64>,
    /// Time series for commands whose primary output is CSV.
    pub csv: Option<String>,
}

impl Outcome {
    fn new(result: Value, checks: Checks, tolerances: BTreeMap<String, f64>) -> Self {
        Self {
            result,
            checks,
            tolerances,
            csv: None,
        }
    }
}

pub fn relation_check(a: &RelationCheckArgs, tol: &[String]) -> CliResult<Outcome> {
    let t = tolerances(&[("cayley_norm", 1e-10), ("cayley_roundtrip", 1e-10)], tol)?;
    let rel = parse::relation(&a.file)?;
    let v = classify_relation(&rel, a.samples);
    let mut checks = Checks::default();
    let mut cay = Value::Null;
    if v.dissipative {
        let ct = cayley(&rel)?;
        let total = ct.is_total();
        let norm = spectral_norm(&rel.space().operator_to_iso(ct.matrix()));
        checks.at_most("cayley_norm", norm - 1.0, t["cayley_norm"]);
        checks.holds("cayley_total_iff_maximal", total == v.maximal_dissipative);
        let mut rt = None;
        if total {
            let k = ct.into_contraction()?;
            let d = inverse_cayley(&k).distance(&rel);
            checks.at_most("cayley_roundtrip", d, t["cayley_roundtrip"]);
            rt = Some(d);
        }
        cay = json!({ "norm": norm, "total": total, "roundtrip_distance": rt });
    }
    for p in &a.require {
        let ok = match p {
            RelationProperty::Dissipative => v.dissipative,
            RelationProperty::MaximalDissipative => v.maximal_dissipative,
            RelationProperty::Accretive => v.accretive,
            RelationProperty::Symmetric => v.symmetric,
            RelationProperty::Selfadjoint => v.selfadjoint,
            RelationProperty::Nonnegative => v.nonnegative,
            RelationProperty::Operator => rel.is_operator(),
        };
        let name = serde_json::to_value(p).expect("enum serializes");
        checks.holds(&format!("require_{}", name.as_str().unwrap_or("?")), ok);
    }
    let result = json!({
        "verdict": v,
        "operator": rel.is_operator(),
        "cayley": cay,
    });
    Ok(Outcome::new(result, checks, t))
}

fn surface_basis(s: &SurfaceArgs, gram_tol: f64) -> CliResult<HodgeBasis<f64>> {
    let model: SurfaceModel = s
        .surface
        .parse()
        .map_err(|e| CliError::field("--surface", e))?;
    if !(s.quad_factor >= 1.0 && s.quad_factor.is_finite()) {
        return Err(CliError::field("--quad-factor", "must be at least 1"));
    }
    if s.lmax == 0 {
        return Err(CliError::field("--lmax", "must be at least 1"));
    }
    let surf = build_surface::<f64>(model, s.lmax, s.quad_factor)?;
    Ok(hodge_basis_with_tolerance(&surf, gram_tol)?)
}

fn mode_table(b: &HodgeBasis<f64>) -> Value {
    Value::Array(
        b.modes()
            .iter()
            .map(|m| {
                json!({
                    "family": m.family,
                    "lambda": m.lambda,
                    "component": m.component,
                    "label": m.label,
                })
            })
            .collect(),
    )
}

pub fn surface_info_cmd(a: &SurfaceInfoArgs, tol: &[String]) -> CliResult<Outcome> {
    let t = tolerances(&[("gram_residual", 1e-9), ("mul_one", 1e-10)], tol)?;
    let b = surface_basis(&a.surface, t["gram_residual"])?;
    let info = surface_info(&b);
    let ones = vec![C::new(1.0, 0.0); b.surface().nodes().len()];
    let g = b.multiplier_gram(&ones)?;
    let mul_one = max_abs(&(g - CMat::identity(b.len(), b.len())));
    let mut checks = Checks::default();
    checks.at_most("gram_residual", info.gram_residual, t["gram_residual"]);
    checks.at_most("mul_one", mul_one, t["mul_one"]);
    let (ng, nh, nc) = b.blocks();
    let mut result = json!({
        "info": info,
        "modes": mode_table(&b),
        "blocks": { "gradient": ng, "harmonic": nh, "curl": nc },
        "b0": info.b0,
        "b1": info.b1,
        "gram_residual": info.gram_residual,
        "mul_one_residual": mul_one,
    });
    if a.tables {
        let f = b.fields();
        let w = b.row_weights();
        result["tables"] = json!({
            "layout": "row 3q+d is component d at quadrature node q",
            "fields": real_table(f.nrows(), f.ncols(), |i, j| f[(i, j)]),
            "row_weights": w.iter().copied().collect::<Vec<f64>>(),
        });
    }
    Ok(Outcome::new(result, checks, t))
}

fn condition_json(c: &BoundaryCondition<f64>) -> Value {
    json!({ "K": matrix(&c.k), "T0": matrix(&c.t0), "T1": matrix(&c.t1) })
}

struct Classified {
    accretivity_margin: f64,
    hermitian_defect: f64,
    kz_norm: f64,
    condition_margin: f64,
    m_dissipative: bool,
    recovery: f64,
}

fn classify_level(
    b: &HodgeBasis<f64>,
    z: &ImpedanceSpec<f64>,
) -> CliResult<(Classified, Value, BoundaryCondition<f64>, CMat<f64>)> {
    let op = boundary_operator(b, z)?;
    let ov = classify_operator(&op);
    let kz = cayley_kz(&op)?;
    let cond = assemble_condition(b, &kz)?;
    let cv = cond.classify()?;
    let c = Classified {
        accretivity_margin: ov.accretivity_margin,
        hermitian_defect: ov.hermitian_defect,
        kz_norm: spectral_norm(kz.matrix()),
        condition_margin: cv.margin,
        m_dissipative: cv.m_dissipative,
        recovery: cv.contraction_recovery_error,
    };
    let v = json!({ "operator": ov, "condition": cv });
    Ok((c, v, cond, op.matrix))
}

pub fn impedance_classify(a: &ClassifyArgs, tol: &[String]) -> CliResult<Outcome> {
    let t = tolerances(
        &[
            ("accretivity", 1e-10),
            ("contraction", 1e-10),
            ("margin", 1e-10),
            ("roundtrip", 1e-10),
        ],
        tol,
    )?;
    let b = surface_basis(&a.surface, 1e-9)?;
    let z = parse::impedance(&a.z, &b)?;
    let (c, detail, cond, op) = classify_level(&b, &z)?;
    let scale = spectral_norm(&op).max(1.0);
    let mut checks = Checks::default();
    checks.at_least(
        "accretivity_margin",
        c.accretivity_margin / scale,
        t["accretivity"],
    );
    checks.at_most("kz_norm_excess", c.kz_norm - 1.0, t["contraction"]);
    checks.holds("m_dissipative", c.m_dissipative);
    checks.at_least("condition_margin", c.condition_margin, t["margin"]);
    checks.at_most("cayley_recovery", c.recovery, t["roundtrip"]);

    let mut table = Vec::new();
    for l in 1..=a.surface.lmax {
        let sa = SurfaceArgs {
            lmax: l,
            surface: a.surface.surface.clone(),
            quad_factor: a.surface.quad_factor,
        };
        let row = surface_basis(&sa, 1e-9).and_then(|bl| {
            let zl = parse::impedance(&a.z, &bl)?;
            let (cl, ..) = classify_level(&bl, &zl)?;
            Ok(json!({
                "lmax": l,
                "dim": bl.len(),
                "accretivity_margin": cl.accretivity_margin,
                "hermitian_defect": cl.hermitian_defect,
                "kz_norm": cl.kz_norm,
                "condition_margin": cl.condition_margin,
                "m_dissipative": cl.m_dissipative,
            }))
        });
        table.push(row.unwrap_or_else(|e| json!({ "lmax": l, "error": e.to_string() })));
    }

    let verdict = if c.m_dissipative {
        "m-dissipative"
    } else {
        "not m-dissipative"
    };
    let mut result = json!({
        "surface": surface_info(&b),
        "impedance": z.describe(),
        "real_valued": z.is_real(&b)?,
        "verdict": verdict,
        "selfadjoint": c.hermitian_defect <= 1e-10 * scale,
        "margin": c.condition_margin,
        "kz_norm": c.kz_norm,
        "detail": detail,
        "convergence": table,
    });
    if a.matrices {
        result["matrices"] = condition_json(&cond);
        result["matrices"]["boundary_operator"] = matrix(&op);
    }
    Ok(Outcome::new(result, checks, t))
}

fn domain_json(d: &RestrictedDomain<f64>) -> Value {
    match d {
        RestrictedDomain::Full => json!("full"),
        RestrictedDomain::Threshold(t) => json!({ "threshold": t }),
        RestrictedDomain::Span(m) => json!({ "span_dim": m.ncols() }),
    }
}

pub fn impedance_extend(a: &ExtendArgs, tol: &[String]) -> CliResult<Outcome> {
    let t = tolerances(
        &[("ordering", 1e-10), ("margin", 1e-10), ("roundtrip", 1e-10)],
        tol,
    )?;
    let b = surface_basis(&a.surface, 1e-9)?;
    let z = parse::impedance(&a.z, &b)?;
    let domain = parse::domain(&a.domain, &z)?;
    let fk = fk_extensions(&b, &z, &domain)?;
    let (chosen, psi) = match a.method {
        ExtensionMethod::Friedrichs => (&fk.friedrichs, &fk.psi_friedrichs),
        ExtensionMethod::Krein => (&fk.krein, &fk.psi_krein),
    };
    let pv = classify_relation(psi, 0);
    let cv = chosen.classify()?;
    let rf = resolvent_iso(&fk.psi_friedrichs)?;
    let rk = resolvent_iso(&fk.psi_krein)?;
    let ordering = min_eigenvalue(&hermitian_part(&(rk - rf)));
    let mut checks = Checks::default();
    checks.holds("m_dissipative", cv.m_dissipative);
    checks.holds("extension_selfadjoint", pv.selfadjoint);
    checks.at_least("extension_nonnegative", pv.accretivity_margin, t["margin"]);
    checks.at_least("condition_margin", cv.margin, t["margin"]);
    checks.at_most(
        "cayley_recovery",
        cv.contraction_recovery_error,
        t["roundtrip"],
    );
    checks.at_least("fk_ordering", ordering, t["ordering"]);
    let result = json!({
        "surface": surface_info(&b),
        "impedance": z.describe(),
        "method": a.method,
        "domain": domain_json(&domain),
        "domain_dim": fk.domain_dim,
        "dim": fk.dim,
        "gap": fk.gap,
        "resolvent_difference": fk.resolvent_difference,
        "ordering_min_eigenvalue": ordering,
        "extension": pv,
        "condition": cv,
        "matrices": condition_json(chosen),
    });
    Ok(Outcome::new(result, checks, t))
}

fn boundary(bc: &BcArgs) -> CliResult<BoundarySpec<f64>> {
    match &bc.k {
        Some(path) => {
            let v = parse::read_json("--K", path)?;
            let k = parse::matrix_value("--K", &v)?;
            if k.nrows() != 2 || k.ncols() != 2 {
                return Err(CliError::field("--K", "must be 2×2"));
            }
            Ok(BoundarySpec::contraction(k)?)
        }
        None => {
            let spec = BoundarySpec::impedance(bc.z0.unwrap_or(1.0), bc.z1.unwrap_or(1.0));
            spec.k_matrix()?;
            Ok(spec)
        }
    }
}

fn medium(m: &MediumArgs) -> CliResult<(Maxwell1D<f64>, Sbp)> {
    let model = parse::medium(&m.eps, &m.mu)?;
    let sbp: Sbp = m.sbp.parse().map_err(|e| CliError::field("--sbp", e))?;
    Ok((model, sbp))
}

pub fn maxwell_evolve(a: &EvolveArgs, tol: &[String]) -> CliResult<Outcome> {
    let t = tolerances(&[("energy_increase", 1e-12)], tol)?;
    let (model, sbp) = medium(&a.medium)?;
    let bc = boundary(&a.bc)?;
    if !(a.dt > 0.0 && a.dt.is_finite()) {
        return Err(CliError::field("--dt", "must be positive"));
    }
    let pulse = parse::pulse(&a.pulse)?;
    let g = build_generator_with(&model, &bc, a.medium.n, sbp)?;
    let psi0 = gaussian_pulse(&g, &pulse)?;
    let tr = evolve_cn(&g, &psi0, a.dt, a.steps)?;
    let inc = tr.max_energy_increase();
    let mut checks = Checks::default();
    checks.at_most("energy_increase", inc.max(0.0), t["energy_increase"]);
    let first = tr.records.first().map_or(0.0, |r| r.energy);
    let last = tr.records.last().map_or(0.0, |r| r.energy);
    let result = json!({
        "K": matrix(&g.k),
        "pulse": pulse,
        "initial_energy": first,
        "final_energy": last,
        "max_relative_energy_increase": inc,
        "max_relative_drift": tr.max_relative_drift(),
        "records": tr.records.len(),
    });
    let mut out = Outcome::new(result, checks, t);
    out.csv = Some(tr.to_csv());
    Ok(out)
}

pub fn maxwell_range(a: &RangeArgs, tol: &[String]) -> CliResult<Outcome> {
    let t = tolerances(
        &[
            ("resolvent", 1e-8),
            ("eigenvalue", 1e-10),
            ("numerical_range", 1e-10),
        ],
        tol,
    )?;
    let (model, sbp) = medium(&a.medium)?;
    let bc = boundary(&a.bc)?;
    if a.samples == 0 {
        return Err(CliError::field("--samples", "must be positive"));
    }
    let g = build_generator_with(&model, &bc, a.medium.n, sbp)?;
    let probe = ResolventProbe::new_with(&model, a.medium.n, sbp)?;
    let grid = default_lambda_grid::<f64>(a.samples);
    let r = probe.report(&g, &grid)?;
    let scale = g.operator_norm();
    let eigs = spectrum(&g)?;
    let top = eigs
        .iter()
        .copied()
        .max_by(|x, y| x.im.total_cmp(&y.im))
        .unwrap_or(C::new(0.0, 0.0));
    let mut checks = Checks::default();
    checks.at_most(
        "scaled_resolvent_excess",
        r.max_scaled_resolvent - 1.0,
        t["resolvent"],
    );
    checks.at_most("eigenvalue_im_over_norm", top.im / scale, t["eigenvalue"]);
    checks.at_most(
        "numerical_range_im_over_norm",
        r.numerical_range_max_im / scale,
        t["numerical_range"],
    );
    let result = json!({
        "K": matrix(&g.k),
        "n": a.medium.n,
        "operator_norm": scale,
        "resolvent": r,
        "max_im_eigenvalue": complex(top),
        "eigenvalues": eigs.len(),
    });
    Ok(Outcome::new(result, checks, t))
}

pub fn maxwell_green(a: &GreenArgs, tol: &[String]) -> CliResult<Outcome> {
    let t = tolerances(&[("continuum", 1e-10), ("discrete", 1e-12)], tol)?;
    let (model, sbp) = medium(&a.medium)?;
    let bc = boundary(&a.bc)?;
    let case = GreenCase::parse(&a.case).map_err(|e| CliError::field("--case", e))?;
    let (psi, phi) = case.fields::<f64>();
    let cont = green_identity(&model, &psi, &phi);

    let g = build_generator_with(&model, &bc, a.medium.n, sbp)?;
    let sample = |f: &mdisp::maxwell1d::SmoothField<f64>| {
        let mut v: Vec<C<f64>> = g.nodes.iter().map(|&x| (f.e)(x)).collect();
        v.extend(g.nodes.iter().map(|&x| (f.h)(x)));
        let e = g.energy(&v).sqrt();
        if e > 0.0 {
            v.iter_mut().for_each(|z| *z /= e);
        }
        v
    };
    let (ps, fs) = (sample(&psi), sample(&phi));
    let scale = g.operator_norm().max(1.0);
    let disc = discrete_green_residual(&g, &ps, &fs) / scale;
    let mut checks = Checks::default();
    checks.at_most("continuum_residual", cont.residual, t["continuum"]);
    checks.at_most("discrete_residual", disc, t["discrete"]);
    let result = json!({
        "case": case,
        "continuum": cont,
        "discrete": {
            "n": a.medium.n,
            "K": matrix(&g.k),
            "residual_over_norm": disc,
        },
    });
    Ok(Outcome::new(result, checks, t))
}

/// Worker count from `MDISP_THREADS`, if set.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var("MDISP_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                CliError::field("MDISP_THREADS", format!("`{s}` is not a positive integer"))
            }),
    }
}

pub fn suite(a: &SuiteArgs, tol: &[String], seed: u64, timing: bool) -> CliResult<Outcome> {
    let name: SuiteName = a.name.parse().map_err(|e| CliError::field("suite", e))?;
    if !tol.is_empty() {
        tolerances(&[], tol)?;
    }
    let opts = SuiteOptions { seed, timing };
    let ids = name.criteria();
    let work = || -> Vec<CriterionReport> {
        use rayon::prelude::*;
        ids.par_iter().map(|&id| run_criterion(id, &opts)).collect()
    };
    let reports = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut checks = Checks::default();
    let mut table = BTreeMap::new();
    for r in &reports {
        checks.holds(
            &format!("criterion_{:02}_{}", r.id, criterion_name(r.id)),
            r.passed,
        );
        for (k, v) in &r.tolerances {
            table.insert(format!("criterion_{:02}.{k}", r.id), *v);
        }
    }
    let result = json!({
        "suite": name,
        "passed": reports.iter().filter(|r| r.passed).count(),
        "total": reports.len(),
        "criteria": reports,
    });
    Ok(Outcome::new(result, checks, table))
}
