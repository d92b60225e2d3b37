use num_bigint::BigUint;
use serde_json::{json, Value};
use tracenorm::bounds::{self, c_nu, c_nu_best, Mode, Provenance, QValue, EXTENDED_MAX_NU, ROUTINE_MAX_NU};
use tracenorm::census::{self, CensusOptions, TheoremCheck, DEFAULT_CENSUS_CAP};
use tracenorm::characters;
use tracenorm::field::{build_context_with, divisors, ContextOptions};
use tracenorm::intfactor::{self, DEFAULT_FACTOR_BUDGET};
use tracenorm::linearized::{self, TraceProfile};
use tracenorm::polyq::{self, PolyQ};
use tracenorm::{BaseField, FieldContext, FieldSpec};

use crate::config::Config;
use crate::{Cli, Command, Failure, FieldArgs, ModeArg, SourceArg};

type Out = Result<Value, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into(), "invalid_argument")
}

fn context_options(cfg: &Config) -> ContextOptions {
    let mut o = ContextOptions::default();
    if let Some(c) = cfg.dlog_cap {
        o.dlog_cap = c;
    }
    if let Some(b) = cfg.factor_budget {
        o.factor_budget = b;
    }
    o
}

fn field_spec(f: &FieldArgs, cfg: &Config, default_m: Option<u32>) -> Result<FieldSpec, Failure> {
    let p = f.p.or(cfg.field.p).ok_or_else(|| invalid("missing --p"))?;
    let e = f.e.or(cfg.field.e).unwrap_or(1);
    let m = f.m.or(cfg.field.m).or(default_m).ok_or_else(|| invalid("missing --m"))?;
    if e == 0 || m == 0 {
        return Err(invalid("e and m must be at least 1"));
    }
    let modulus = f.modulus.clone().or_else(|| cfg.field.modulus.clone());
    Ok(FieldSpec { p, e, m, modulus })
}

fn context(f: &FieldArgs, cfg: &Config, default_m: Option<u32>) -> Result<FieldContext, Failure> {
    let spec = field_spec(f, cfg, default_m)?;
    Ok(build_context_with(&spec, context_options(cfg))?)
}

fn element(ctx: &FieldContext, enc: u64) -> Result<tracenorm::FieldElement, Failure> {
    Ok(ctx.decode(enc)?)
}

fn poly_json(base: &BaseField, f: &PolyQ) -> Value {
    json!({ "text": f.render(base), "coeffs": f.coeffs })
}

/// Text such as `x^2+1` or a JSON coefficient array, constant term first.
fn parse_poly(base: &BaseField, s: &str) -> Result<PolyQ, Failure> {
    let t = s.trim();
    if t.starts_with('[') {
        let coeffs: Vec<u64> = serde_json::from_str(t).map_err(|e| invalid(format!("polynomial {t}: {e}")))?;
        let f = PolyQ::new(coeffs);
        f.check(base)?;
        Ok(f)
    } else {
        Ok(PolyQ::parse(base, t)?)
    }
}

fn profile(ctx: &FieldContext, d: &[u32], a: &[u64]) -> Result<TraceProfile, Failure> {
    if d.len() != a.len() {
        return Err(invalid(format!("{} divisors but {} trace values", d.len(), a.len())));
    }
    let a = a.iter().map(|&x| element(ctx, x)).collect::<Result<Vec<_>, _>>()?;
    let prof = TraceProfile::new(d.to_vec(), a);
    prof.validate(ctx)?;
    Ok(prof)
}

fn workers(cli: &Cli, cfg: &Config) -> usize {
    cli.workers.or(cfg.workers).unwrap_or(1).max(1)
}

fn census_cap(flag: Option<u64>, cfg: &Config) -> u64 {
    flag.unwrap_or_else(|| census::cap_from_env(cfg.census_cap.unwrap_or(DEFAULT_CENSUS_CAP)))
}

fn note(cli: &Cli, msg: &str) {
    if cli.verbose > 0 {
        eprintln!("{msg}");
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

pub fn run(cli: &Cli, cfg: &Config) -> Out {
    match &cli.command {
        Command::FieldInfo { field } => field_info(&context(field, cfg, None)?),
        Command::Factor { field, poly, int } => factor(field, cfg, poly.as_deref(), int.as_deref()),
        Command::Order { field, element: enc } => order(&context(field, cfg, None)?, *enc),
        Command::Trace { field, element: enc, d } => {
            let ctx = context(field, cfg, None)?;
            let x = element(&ctx, *enc)?;
            let t = ctx.trace(&x, *d)?;
            Ok(json!({
                "element": enc,
                "d": d,
                "trace": ctx.encode(&t),
                "subfield_index": ctx.subfield_index(&t, *d)?,
            }))
        }
        Command::SolveTraces { field, d, a } => {
            let ctx = context(field, cfg, None)?;
            let prof = profile(&ctx, d, a)?;
            let adm = linearized::check_admissible(&ctx, &prof)?;
            let lambda = linearized::lambda_of(&ctx, d)?;
            let (witness, count) = match linearized::solve_trace_system(&ctx, &prof) {
                Ok((w, n)) => (Some(ctx.encode(&w)), n),
                Err(tracenorm::Error::NotAdmissible) => (None, BigUint::ZERO),
                Err(e) => return Err(e.into()),
            };
            Ok(json!({
                "d": d,
                "a": a,
                "lambda": lambda,
                "admissible": adm.admissible,
                "normal_admissible": adm.normal_admissible,
                "witness": witness,
                "solutions": count.to_string(),
            }))
        }
        Command::CountNormal { field, d, a } => {
            let ctx = context(field, cfg, None)?;
            let prof = profile(&ctx, d, a)?;
            let n = linearized::normal_with_traces_count(&ctx, &prof)?;
            Ok(json!({ "count": n.to_string() }))
        }
        Command::CheckBound { q, m, d, mode } => {
            let q = QValue::parse(q)?;
            let mode = mode.or_else(|| cfg.mode.as_deref().and_then(parse_mode)).map(|md| match md {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Bounded => Mode::Bounded,
                ModeArg::Log => Mode::LogSpace,
            });
            let budget = cfg.factor_budget.unwrap_or(DEFAULT_FACTOR_BUDGET);
            Ok(to_value(&bounds::check_bound(&q, *m, d, mode, budget)?))
        }
        Command::Dispatch { q, m, d } => {
            let q = QValue::parse(q)?;
            let budget = cfg.factor_budget.unwrap_or(DEFAULT_FACTOR_BUDGET);
            Ok(to_value(&bounds::th51_dispatch(&q, *m, d, budget)?))
        }
        Command::Census { field, d, cap, no_fibers, timing } => {
            let ctx = context(field, cfg, None)?;
            let opts = CensusOptions {
                workers: workers(cli, cfg),
                cap: census_cap(*cap, cfg),
                fibers: !no_fibers,
                timing: *timing,
            };
            note(cli, &format!("census of {} elements with {} workers", ctx.size, opts.workers));
            Ok(to_value(&census::run_census(&ctx, d, &opts)?))
        }
        Command::Verify { field, d, cap } => verify(cli, cfg, field, d.as_deref(), *cap),
        Command::Constants { nu, source, extended } => constants(cli, cfg, nu, *source, *extended),
    }
}

fn parse_mode(s: &str) -> Option<ModeArg> {
    match s {
        "exact" => Some(ModeArg::Exact),
        "bounded" => Some(ModeArg::Bounded),
        "log" | "log_space" | "log-space" => Some(ModeArg::Log),
        _ => None,
    }
}

fn field_info(ctx: &FieldContext) -> Out {
    let subfields: Vec<Value> = divisors(ctx.m)
        .into_iter()
        .map(|d| json!({ "d": d, "size": ctx.q.pow(d).to_string() }))
        .collect();
    let factors: Vec<Value> = ctx
        .xm1
        .factors
        .iter()
        .map(|(f, k)| json!({ "factor": poly_json(&ctx.base, f), "multiplicity": k }))
        .collect();
    Ok(json!({
        "field": to_value(&ctx.summary()),
        "subfields": subfields,
        "xm1_factors": factors,
        "phi_xm1": linearized::phi_xm1(ctx).to_string(),
        "w_xm1": polyq::w_of(&ctx.xm1).to_string(),
        "phi_order": intfactor::euler_phi(&ctx.order_factors).to_string(),
    }))
}

fn factor(field: &FieldArgs, cfg: &Config, poly: Option<&str>, int: Option<&str>) -> Out {
    if let Some(s) = int {
        let n: BigUint = s.trim().parse().map_err(|_| invalid(format!("not an integer: {s}")))?;
        if n < BigUint::from(1u32) {
            return Err(invalid("integer must be positive"));
        }
        let budget = cfg.factor_budget.unwrap_or(DEFAULT_FACTOR_BUDGET);
        let fac = intfactor::factor(&n, budget)?;
        let factors: Vec<Value> = fac.iter().map(|(p, k)| json!({ "prime": p.to_string(), "multiplicity": k })).collect();
        return Ok(json!({
            "n": n.to_string(),
            "factors": factors,
            "omega": intfactor::omega(&fac),
            "w": intfactor::w_of(&fac).to_string(),
            "phi": intfactor::euler_phi(&fac).to_string(),
        }));
    }
    let s = poly.ok_or_else(|| invalid("give --poly or --int"))?;
    let ctx = context(field, cfg, Some(1))?;
    let f = parse_poly(&ctx.base, s)?;
    if f.is_zero() {
        return Err(invalid("cannot factor the zero polynomial"));
    }
    let fac = polyq::factor(&ctx, &f)?;
    let factors: Vec<Value> = fac
        .factors
        .iter()
        .map(|(g, k)| json!({ "factor": poly_json(&ctx.base, g), "multiplicity": k }))
        .collect();
    Ok(json!({
        "input": poly_json(&ctx.base, &f),
        "unit": fac.unit,
        "factors": factors,
        "phi": polyq::phi_of(ctx.q, &fac).to_string(),
        "mu": polyq::mu_of(&fac),
        "w": polyq::w_of(&fac).to_string(),
    }))
}

fn order(ctx: &FieldContext, enc: u64) -> Out {
    let b = element(ctx, enc)?;
    let ord = linearized::additive_order(ctx, &b);
    let (mult, primitive) = match ctx.multiplicative_order(&b) {
        Ok((o, prim)) => (Some(o.to_string()), prim),
        Err(tracenorm::Error::ZeroElement) => (None, false),
        Err(e) => return Err(e.into()),
    };
    Ok(json!({
        "element": enc,
        "additive_order": ord.render(&ctx.base),
        "additive_order_coeffs": ord.coeffs,
        "normal": linearized::is_normal(ctx, &b, ctx.m)?,
        "multiplicative_order": mult,
        "primitive": primitive,
    }))
}

fn record(out: &mut Vec<Value>, scope: &str, checks: Vec<TheoremCheck>) {
    for c in checks {
        let mut v = to_value(&c);
        v["scope"] = json!(scope);
        out.push(v);
    }
}

fn simple(id: &str, description: &str, expected: impl ToString, observed: impl ToString, pass: bool) -> TheoremCheck {
    TheoremCheck {
        theorem_id: id.into(),
        description: description.into(),
        expected: expected.to_string(),
        observed: observed.to_string(),
        pass,
    }
}

/// Census fields checked by `verify` without arguments.
const DEFAULT_SUITE: [(u64, u32, u32, &[u32]); 6] = [
    (2, 1, 15, &[3, 5]),
    (5, 1, 6, &[2, 3]),
    (3, 1, 4, &[1]),
    (2, 1, 6, &[2, 3]),
    (2, 1, 12, &[3, 4]),
    (3, 1, 8, &[2]),
];

fn verify(cli: &Cli, cfg: &Config, field: &FieldArgs, d: Option<&[u32]>, cap: Option<u64>) -> Out {
    let opts = CensusOptions { workers: workers(cli, cfg), cap: census_cap(cap, cfg), fibers: true, timing: false };
    let mut out = Vec::new();
    let single = field.p.is_some() || d.is_some();
    let targets: Vec<(FieldContext, Vec<u32>)> = if single {
        let d = d.ok_or_else(|| invalid("missing --d"))?;
        vec![(context(field, cfg, None)?, d.to_vec())]
    } else {
        DEFAULT_SUITE
            .iter()
            .map(|&(p, e, m, d)| Ok((build_context_with(&FieldSpec::new(p, e, m), context_options(cfg))?, d.to_vec())))
            .collect::<Result<_, Failure>>()?
    };
    for (ctx, d) in &targets {
        let scope = format!("census q={} m={} d={:?}", ctx.q, ctx.m, d);
        note(cli, &scope);
        let rep = census::run_census(ctx, d, &opts)?;
        record(&mut out, &scope, census::verify_theorems(ctx, d, &rep)?);
        if ctx.m as u64 % ctx.p == 0 {
            continue;
        }
        let mut audit_fail = Vec::new();
        let mut audited = 0;
        for r in rep.profiles.iter().filter(|r| r.normal_admissible) {
            let a: Vec<_> = d.iter().zip(&r.a).map(|(&di, &ai)| ctx.subfield_element(di, ai)).collect::<Result<_, _>>()?;
            let prof = TraceProfile::new(d.clone(), a);
            let n: BigUint = r.primitive_normal.parse().unwrap();
            let b = characters::s1_s2_breakdown(ctx, &prof, &n)?;
            audited += 1;
            if !(b.s1_exceeds_count && b.s2_within_bound) {
                audit_fail.push(r.a.clone());
            }
        }
        record(
            &mut out,
            &scope,
            vec![simple(
                "s1_s2_inequalities",
                "S1 > q^(m - lambda) and |S2| <= q^(m/2 + D) W(q^m - 1) W(x^m - 1) on every normal admissible tuple",
                format!("{audited} of {audited}"),
                format!("{} of {audited}", audited - audit_fail.len()),
                audit_fail.is_empty(),
            )],
        );
    }
    if !single {
        note(cli, "oracles and exceptional set");
        let pm = census::verify_pmtrace_exceptions(7, 3, opts.cap)?;
        record(
            &mut out,
            "primitive trace exceptions q<=7 m<=3",
            vec![simple(
                "prescribed_absolute_trace_exceptions",
                "no primitive element of trace a exactly for (q, 2, 0) and (4, 3, 0)",
                format!("{:?}", pm.expected),
                format!("{:?}", pm.exceptions),
                pm.pass,
            )],
        );
        for (p, e, m) in [(2u64, 1u32, 6u32), (3, 1, 4), (2, 2, 3)] {
            let ctx = build_context_with(&FieldSpec::new(p, e, m), context_options(cfg))?;
            let r = characters::oracle_sweep(&ctx, 50, 1e-9)?;
            let ok = r.max_error() < 1e-9
                && r.rho_mismatches + r.kappa_mismatches + r.tau_mismatches == 0
                && r.gauss_max_relative_error < 1e-9
                && r.gauss_zero_max_abs < 1e-9;
            record(
                &mut out,
                &format!("oracles q={} m={m}", ctx.q),
                vec![simple(
                    "characteristic_function_oracles",
                    "character-sum oracles agree with direct classification",
                    "error < 1e-9",
                    format!("{:.2e}", r.max_error().max(r.gauss_max_relative_error)),
                    ok,
                )],
            );
        }
        let t4 = bounds::recompute_threshold(4, 11, 2000)?;
        let t5 = bounds::recompute_threshold(5, 11, 4000)?;
        record(
            &mut out,
            "thresholds",
            vec![
                simple(
                    "k4_threshold",
                    "recomputed k = 4 threshold with nu = 11",
                    "1334",
                    t4.threshold.clone().unwrap_or_default(),
                    t4.threshold.as_deref() == Some("1334"),
                ),
                simple(
                    "k5_threshold",
                    "recomputed k = 5 threshold with nu = 11",
                    "9",
                    t5.threshold.clone().unwrap_or_default(),
                    t5.threshold.as_deref() == Some("9"),
                ),
            ],
        );
    }
    let failed = out.iter().filter(|c| c["pass"] != json!(true)).count();
    let v = json!({ "checks": out, "failed": failed, "pass": failed == 0 });
    if failed > 0 {
        Err(Failure::Verification(v))
    } else {
        Ok(v)
    }
}

fn constants(cli: &Cli, cfg: &Config, nus: &[u32], source: SourceArg, extended: bool) -> Out {
    let max_nu = if extended { EXTENDED_MAX_NU } else { ROUTINE_MAX_NU };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers(cli, cfg))
        .build()
        .map_err(|e| invalid(e.to_string()))?;
    let mut out = Vec::new();
    for &nu in nus {
        note(cli, &format!("C_{nu}"));
        let c = pool.install(|| match source {
            SourceArg::Best => c_nu_best(nu),
            SourceArg::Table => c_nu(nu, Provenance::PaperTable, max_nu),
            SourceArg::Computed => c_nu(nu, Provenance::Computed, max_nu),
        })?;
        out.push(to_value(&c));
    }
    Ok(json!({ "constants": out }))
}
