use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pseudolab::corr::{
    self, AdversaryClass, DEFAULT_CLASS_BUDGET, DEFAULT_MC_SAMPLES, MAX_FOOLING_BITS,
};
use pseudolab::extract::{certify_seeded, parity_blocks_word, BitFixingSource, Extractor};
use pseudolab::gf2::FieldSpec;
use pseudolab::hardfn::{ExtFfm, FunctionDescriptor, Gip, Rw};
use pseudolab::models::{
    decompose_2bp, fourier_expand, BooleanFunction, BranchingProgram2, DynFunction, XorOfJuntas,
};
use pseudolab::prg::{
    aw_prg, bp2_prg, build_design_with_budget, junta_prg, smallest_design, Generator, NwGenerator,
    PseudoRestrictionSampler, DEFAULT_NODE_BUDGET,
};
use pseudolab::Bits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::manifest::{Expect, GeneratorSpec, Manifest, Measurement, Op, Recipe, Ref};
use crate::{dist, CliError, CSV_SCHEMA, EXIT_BUDGET, EXIT_CHECK, EXIT_OK, EXIT_VALIDATION};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: String,
    pub csv: String,
    pub timings: String,
    pub pass: bool,
    pub exit_code: i32,
}

pub fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("ParseError in {}: {e}", path.display())))
}

/// Run a manifest file and write its report, CSV table and timings next to
/// `out_dir` (default: the current directory).
pub fn run_manifest(path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let manifest = load_manifest(path)?;
    let outcome = execute(&manifest, opts)?;
    let dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join(&manifest.outputs.report), &outcome.report)?;
    std::fs::write(dir.join(&manifest.outputs.csv), &outcome.csv)?;
    std::fs::write(dir.join(&manifest.outputs.timings), &outcome.timings)?;
    Ok(outcome)
}

/// Value of a measurement plus whatever else it wants to report.
struct Outcome {
    value: f64,
    radius: f64,
    holds: Option<bool>,
    detail: Value,
}

impl Outcome {
    fn value(value: f64, detail: Value) -> Self {
        Outcome {
            value,
            radius: 0.0,
            holds: None,
            detail,
        }
    }

    fn bound(value: f64, holds: bool, detail: Value) -> Self {
        Outcome {
            value,
            radius: 0.0,
            holds: Some(holds),
            detail,
        }
    }

    fn report(r: corr::CorrReport) -> Self {
        Outcome {
            value: r.value,
            radius: r.radius,
            holds: None,
            detail: to_value(&r),
        }
    }
}

type Task = Box<dyn Fn(&mut ChaCha8Rng) -> Result<Outcome, CliError> + Send + Sync>;

struct Prepared {
    task: Task,
    randomized: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100000001b3)
    })
}

fn resolve<T: Clone>(r: &Ref<T>, table: &BTreeMap<String, T>, kind: &str) -> Result<T, CliError> {
    match r {
        Ref::Inline(v) => Ok(v.clone()),
        Ref::Name(n) => table.get(n).cloned().ok_or_else(|| {
            CliError::Validation(format!("UnknownDescriptor: no {kind} named {n:?}"))
        }),
    }
}

pub fn build_generator(spec: &GeneratorSpec) -> Result<Box<dyn Generator>, CliError> {
    Ok(match spec {
        GeneratorSpec::Descriptor(d) => d.build()?,
        GeneratorSpec::Recipe(Recipe::Junta {
            n,
            d,
            epsilon,
            hard,
            constants,
        }) => junta_prg(*n, *d, *epsilon, hard.as_ref(), constants)?,
        GeneratorSpec::Recipe(Recipe::Bp2 {
            n,
            d,
            t,
            epsilon,
            constants,
        }) => bp2_prg(*n, *d, *t, *epsilon, constants)?,
        GeneratorSpec::Recipe(Recipe::Aw {
            base,
            sampler,
            rounds,
        }) => Box::new(aw_prg(build_generator(base)?, sampler.build()?, *rounds)?),
    })
}

struct Ctx<'a> {
    m: &'a Manifest,
}

impl Ctx<'_> {
    fn function(
        &self,
        r: &Ref<FunctionDescriptor>,
    ) -> Result<(FunctionDescriptor, DynFunction), CliError> {
        let d = resolve(r, &self.m.functions, "function")?;
        let f = d.build()?;
        Ok((d, f))
    }

    fn class(&self, r: &Ref<AdversaryClass>) -> Result<AdversaryClass, CliError> {
        resolve(r, &self.m.classes, "class")
    }

    fn generator(&self, r: &Ref<GeneratorSpec>) -> Result<Box<dyn Generator>, CliError> {
        build_generator(&resolve(r, &self.m.generators, "generator")?)
    }

    fn extractor(&self, r: &Ref<Extractor>) -> Result<Extractor, CliError> {
        resolve(r, &self.m.extractors, "extractor")
    }
}

fn same_arity(expected: usize, got: usize) -> Result<(), CliError> {
    if expected != got {
        return Err(pseudolab::Error::ArityMismatch { expected, got }.into());
    }
    Ok(())
}

fn exhaustive_fooling(g: &dyn Generator) -> bool {
    g.seed_len() <= MAX_FOOLING_BITS && g.output_len() <= MAX_FOOLING_BITS
}

fn prepare(ctx: &Ctx, op: &Op) -> Result<Prepared, CliError> {
    let fixed = |task: Task| Prepared {
        task,
        randomized: false,
    };
    let random = |task: Task| Prepared {
        task,
        randomized: true,
    };
    Ok(match op.clone() {
        Op::CorrExact { f, g } => {
            let (_, f) = ctx.function(&f)?;
            let (_, g) = ctx.function(&g)?;
            same_arity(f.arity(), g.arity())?;
            fixed(Box::new(move |_| {
                Ok(Outcome::report(corr::corr_exact(&*f, &*g)?))
            }))
        }
        Op::CorrMc { f, g, samples } => {
            let (_, f) = ctx.function(&f)?;
            let (_, g) = ctx.function(&g)?;
            same_arity(f.arity(), g.arity())?;
            random(Box::new(move |rng| {
                Ok(Outcome::report(corr::corr_mc(&*f, &*g, samples, rng)?))
            }))
        }
        Op::CorrClassMax { f, class, budget } => {
            let (_, f) = ctx.function(&f)?;
            let class = ctx.class(&class)?;
            same_arity(class.arity()?, f.arity())?;
            let budget = budget.unwrap_or(DEFAULT_CLASS_BUDGET);
            fixed(Box::new(move |_| {
                Ok(Outcome::report(corr::corr_class_max_with_budget(
                    &*f, &class, budget,
                )?))
            }))
        }
        Op::KpartyNorm { f, k, b, samples } => {
            let (_, f) = ctx.function(&f)?;
            same_arity(k * b, f.arity())?;
            match samples {
                Some(s) => random(Box::new(move |rng| {
                    Ok(Outcome::report(corr::kparty_norm_mc(&*f, k, b, s, rng)?))
                })),
                None => fixed(Box::new(move |_| {
                    let v = corr::kparty_norm(&*f, k, b)?;
                    Ok(Outcome::value(
                        v,
                        json!({ "k": k, "b": b, "mode": "exact" }),
                    ))
                })),
            }
        }
        Op::NofSandwich { f } => {
            let (_, f) = ctx.function(&f)?;
            same_arity(2, f.arity())?;
            fixed(Box::new(move |_| {
                let r2 = corr::kparty_norm(&*f, 2, 1)?;
                let best = corr::corr_class_max(&*f, &AdversaryClass::Nof1Bit { b: 1 })?;
                let upper = 2.0 * r2.powf(0.25);
                let holds = r2 <= best.value && best.value <= upper;
                Ok(Outcome::bound(
                    best.value,
                    holds,
                    json!({ "norm": r2, "upper": upper, "best": best }),
                ))
            }))
        }
        Op::Tv { a, b } => {
            let (da, db) = dist::pair(&a, &b)?;
            fixed(Box::new(move |_| {
                let v = corr::tv_distance(&da, &db)?;
                Ok(Outcome::value(v, json!({ "support": da.support_size() })))
            }))
        }
        Op::FoolingError { generator, f } => {
            let g = ctx.generator(&generator)?;
            let (_, f) = ctx.function(&f)?;
            same_arity(g.output_len(), f.arity())?;
            let exhaustive = exhaustive_fooling(&*g);
            let task: Task = Box::new(move |rng| {
                let seed = if exhaustive { 0 } else { rng.gen() };
                let mut out = Outcome::report(corr::fooling_error_with(
                    &*g,
                    &*f,
                    DEFAULT_MC_SAMPLES,
                    seed,
                )?);
                out.detail["generator"] = to_value(&g.descriptor());
                Ok(out)
            });
            Prepared {
                task,
                randomized: !exhaustive,
            }
        }
        Op::MaxFoolingError { generator, class } => {
            let g = ctx.generator(&generator)?;
            let class = ctx.class(&class)?;
            same_arity(g.output_len(), class.arity()?)?;
            fixed(Box::new(move |_| {
                let mut out = Outcome::report(corr::max_fooling_error(&*g, &class)?);
                out.detail["generator"] = to_value(&g.descriptor());
                Ok(out)
            }))
        }
        Op::ExtractorCertify {
            extractor,
            free,
            epsilon,
        } => {
            let ext = ctx.extractor(&extractor)?;
            let sources = BitFixingSource::all(ext.input_len(), free)?;
            fixed(Box::new(move |_| {
                let r = certify_seeded(&ext, &sources, epsilon)?;
                Ok(Outcome::bound(
                    r.max_average_tv,
                    r.average_ok && r.strong_ok,
                    to_value(&r),
                ))
            }))
        }
        Op::ExtffmBound {
            f,
            d,
            k,
            epsilon,
            class,
        } => {
            let (desc, _) = ctx.function(&f)?;
            let FunctionDescriptor::Extffm { d: fd, ext, field } = desc else {
                return Err(CliError::Validation(
                    "extffm_bound needs an extffm function".into(),
                ));
            };
            let func = ExtFfm::new(fd, ext, field)?;
            let class = ctx.class(&class)?;
            same_arity(func.arity(), class.arity()?)?;
            fixed(Box::new(move |_| {
                let (eps, measured_from) = match epsilon {
                    Some(e) => (e, None),
                    None => {
                        let sources = BitFixingSource::all(ext.input_len(), k)?;
                        let r = certify_seeded(&ext, &sources, 0.25)?;
                        (r.measured_epsilon, Some(r))
                    }
                };
                let r = corr::check_extffm_bound(&func, d, k, eps, &class)?;
                Ok(Outcome::bound(
                    r.measured,
                    r.pass,
                    json!({ "bound": r, "epsilon_certificate": measured_from }),
                ))
            }))
        }
        Op::Design {
            count,
            universe,
            r,
            k,
            budget,
        } => fixed(Box::new(move |_| {
            let budget = budget.unwrap_or(DEFAULT_NODE_BUDGET);
            let d = match universe {
                Some(s) => build_design_with_budget(count, s, r, k, budget)?,
                None => smallest_design(count, r, k, budget)?,
            };
            Ok(Outcome::value(
                d.universe() as f64,
                json!({ "design": d, "realized_intersection": d.realized_intersection() }),
            ))
        })),
        Op::FieldAxioms { width } => {
            if width == 0 || width > 8 {
                return Err(pseudolab::Error::BudgetExceeded(format!(
                    "exhaustive axioms need width <= 8, got {width}"
                ))
                .into());
            }
            let field = FieldSpec::default_for(width)?;
            fixed(Box::new(move |_| {
                let failures = field_axiom_failures(&field);
                Ok(Outcome::bound(
                    failures as f64,
                    failures == 0,
                    json!({ "field": field, "elements": 1u64 << width }),
                ))
            }))
        }
        Op::RwFactorization { max_size } => fixed(Box::new(move |_| {
            let (cases, inputs, mismatches) = rw_factorization(max_size)?;
            Ok(Outcome::bound(
                mismatches as f64,
                mismatches == 0,
                json!({ "cases": cases, "inputs": inputs }),
            ))
        })),
        Op::L1Bound {
            programs,
            max_len,
            max_arity,
        } => random(Box::new(move |rng| {
            let mut worst = 0.0f64;
            let mut holds = true;
            for _ in 0..programs {
                let t = rng.gen_range(1..=max_len);
                let n = rng.gen_range(1..=max_arity);
                let b = BranchingProgram2::random(1, t, n, rng)?;
                let spec = fourier_expand(&b)?;
                holds &= 2 * spec.l1_numerator() <= (t as u64 + 1) << n;
                worst = worst.max(spec.l1() / ((t as f64 + 1.0) / 2.0));
            }
            Ok(Outcome::bound(
                worst,
                holds,
                json!({ "programs": programs, "worst_ratio": worst }),
            ))
        })),
        Op::Decomposition { programs, d, t, n } => random(Box::new(move |rng| {
            let mut mismatches = 0u64;
            for _ in 0..programs {
                let b = BranchingProgram2::random(d, t, n, rng)?;
                let dec = decompose_2bp(&b)?;
                mismatches += (0..1u64 << n)
                    .into_par_iter()
                    .filter(|&x| dec.core.eval(dec.phi(x)) != b.eval(x))
                    .count() as u64;
            }
            Ok(Outcome::bound(
                mismatches as f64,
                mismatches == 0,
                json!({ "programs": programs, "inputs_each": 1u64 << n }),
            ))
        })),
        Op::NwAccounting {
            hard,
            count,
            k,
            hard_class,
            target_class,
        } => {
            let (hard, h) = ctx.function(&hard)?;
            let hard_class = ctx.class(&hard_class)?;
            let target_class = ctx.class(&target_class)?;
            same_arity(h.arity(), hard_class.arity()?)?;
            same_arity(count, target_class.arity()?)?;
            fixed(Box::new(move |_| {
                let eps_h = corr::corr_class_max(&*h, &hard_class)?;
                let design = smallest_design(count, h.arity(), k, DEFAULT_NODE_BUDGET)?;
                let g = NwGenerator::new(design, hard.clone())?;
                let err = corr::max_fooling_error(&g, &target_class)?;
                let bound = count as f64 * eps_h.value;
                Ok(Outcome::bound(
                    err.value,
                    err.value <= bound,
                    json!({ "hardness": eps_h, "bound": bound, "generator": g.descriptor(), "fooling": err }),
                ))
            }))
        }
        Op::Simplification {
            n,
            d,
            delta,
            rule,
            ber_delta,
            width,
            terms,
            trials,
        } => {
            let sampler = PseudoRestrictionSampler::with_ber_delta(n, d, delta, rule, ber_delta)?;
            if trials == 0 {
                return Err(CliError::Validation(
                    "simplification needs at least one trial".into(),
                ));
            }
            random(Box::new(move |rng| {
                let ell = sampler.ell();
                let mut hits = 0usize;
                for _ in 0..trials {
                    let f = XorOfJuntas::random(n, width, terms, rng)?;
                    let seed = random_bits(sampler.seed_len(), rng);
                    let rho = sampler.sample(&seed)?;
                    let mut ok = true;
                    for j in f.terms() {
                        ok &= j.restricted_support(&rho)?.len() <= ell;
                    }
                    hits += ok as usize;
                }
                let freq = hits as f64 / trials as f64;
                let sigma = (delta * (1.0 - delta) / trials as f64).sqrt();
                let threshold = 1.0 - delta - 3.0 * sigma;
                Ok(Outcome::bound(
                    freq,
                    freq >= threshold,
                    json!({
                        "ell": ell,
                        "hits": hits,
                        "trials": trials,
                        "threshold": threshold,
                        "sampler": sampler.descriptor(),
                    }),
                ))
            }))
        }
        Op::Bp2Lifting {
            n,
            d,
            t,
            epsilon,
            programs,
            constants,
        } => {
            let g = bp2_prg(n, d, t, epsilon, &constants)?;
            if !exhaustive_fooling(&*g) {
                return Err(pseudolab::Error::BudgetExceeded(format!(
                    "generator seed {} and output {} exceed the exhaustive limit",
                    g.seed_len(),
                    g.output_len()
                ))
                .into());
            }
            random(Box::new(move |rng| {
                let mut holds = true;
                let mut worst = 0.0f64;
                let mut rows = Vec::with_capacity(programs);
                for _ in 0..programs {
                    let b = BranchingProgram2::random(d, t, n, rng)?;
                    let dec = decompose_2bp(&b)?;
                    // fooling_error reports the gap of (-1)^B; the 0/1 gap is half of it
                    let gap = corr::fooling_error(&*g, &b)?.value / 2.0;
                    let (eps_j, _) = corr::xor_subset_error(&*g, &dec.juntas)?;
                    let l1 = fourier_expand(&dec.core)?.l1();
                    let bound = eps_j * l1;
                    holds &= gap <= bound;
                    worst = worst.max(gap);
                    rows.push(
                        json!({ "gap": gap, "junta_error": eps_j, "l1": l1, "bound": bound }),
                    );
                }
                Ok(Outcome::bound(
                    worst,
                    holds,
                    json!({ "generator": g.descriptor(), "programs": rows }),
                ))
            }))
        }
    })
}

fn random_bits<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Bits {
    Bits::from_bools(&(0..len).map(|_| rng.gen::<bool>()).collect::<Vec<_>>())
}

fn field_axiom_failures(f: &FieldSpec) -> u64 {
    let q = 1u64 << f.width();
    let mul = |a, b| f.mul_raw(a, b);
    let mut bad = 0u64;
    for a in 0..q {
        bad += (mul(a, 1) != a) as u64;
        if a != 0 {
            bad += ((0..q).filter(|&b| mul(a, b) == 1).count() != 1) as u64;
        }
    }
    bad += (0..q)
        .into_par_iter()
        .map(|a| {
            let mut bad = 0u64;
            for b in 0..q {
                bad += (mul(a, b) != mul(b, a)) as u64;
                for c in 0..q {
                    bad += (mul(mul(a, b), c) != mul(a, mul(b, c))) as u64;
                    bad += (mul(a, b ^ c) != mul(a, b) ^ mul(a, c)) as u64;
                }
            }
            bad
        })
        .sum::<u64>();
    bad
}

fn rw_factorization(max_size: usize) -> Result<(u64, u64, u64), CliError> {
    if max_size > 20 {
        return Err(pseudolab::Error::BudgetExceeded(format!(
            "RW sweep up to {max_size} input bits"
        ))
        .into());
    }
    let (mut cases, mut inputs, mut bad) = (0u64, 0u64, 0u64);
    for m in 1..=max_size {
        for k in 1..=max_size / m {
            for r in 1..=max_size / (m * k) {
                let rw = Rw::new(m, k, r)?;
                let gip = Gip::new(m, k)?;
                let len = m * k * r;
                cases += 1;
                inputs += 1 << len;
                bad += (0..1u64 << len)
                    .into_par_iter()
                    .filter(|&x| {
                        let y = (0..k).fold(0u64, |acc, j| {
                            let block = (x >> (j * m * r)) & ((1u64 << (m * r)) - 1);
                            acc | parity_blocks_word(m, r, block) << (j * m)
                        });
                        rw.eval(x) != gip.eval(y)
                    })
                    .count() as u64;
            }
        }
    }
    Ok((cases, inputs, bad))
}

#[derive(Serialize)]
struct Check {
    check: &'static str,
    target: Value,
    pass: bool,
}

fn checks(expect: &Option<Expect>, out: &Outcome) -> Vec<Check> {
    let Some(e) = expect else {
        return Vec::new();
    };
    let mut v = Vec::new();
    if let Some(x) = e.equals {
        v.push(Check {
            check: "equals",
            target: json!(x),
            pass: out.value == x,
        });
    }
    if let Some(x) = e.max {
        v.push(Check {
            check: "max",
            target: json!(x),
            pass: out.value <= x,
        });
    }
    if let Some(x) = e.min {
        v.push(Check {
            check: "min",
            target: json!(x),
            pass: out.value >= x,
        });
    }
    if let Some(x) = e.holds {
        v.push(Check {
            check: "holds",
            target: json!(x),
            pass: out.holds == Some(x),
        });
    }
    v
}

fn limits() -> Value {
    json!({
        "max_corr_arity": corr::MAX_CORR_ARITY,
        "max_class_arity": corr::MAX_CLASS_ARITY,
        "max_norm_bits": corr::MAX_NORM_BITS,
        "max_fooling_bits": corr::MAX_FOOLING_BITS,
        "class_budget": DEFAULT_CLASS_BUDGET,
        "mc_samples": DEFAULT_MC_SAMPLES,
        "mc_confidence": corr::MC_CONFIDENCE,
        "design_node_budget": DEFAULT_NODE_BUDGET,
    })
}

/// Run every measurement of `manifest` and assemble the report, CSV table
/// and timings. Nothing is written to disk.
pub fn execute(manifest: &Manifest, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let seed = opts.seed.or(manifest.seed);
    let mut ids = BTreeSet::new();
    for m in &manifest.measurements {
        if !ids.insert(m.id.as_str()) {
            return Err(CliError::Validation(format!(
                "duplicate measurement id {:?}",
                m.id
            )));
        }
    }
    let ctx = Ctx { m: manifest };
    let mut generators = BTreeMap::new();
    for (name, spec) in &manifest.generators {
        let g = build_generator(spec).map_err(|e| e.within(&format!("generator {name}")))?;
        generators.insert(name.clone(), g.descriptor());
    }
    let prepared = manifest
        .measurements
        .iter()
        .map(|m| prepare(&ctx, &m.op).map_err(|e| e.within(&m.id)))
        .collect::<Result<Vec<_>, _>>()?;
    if seed.is_none() {
        if let Some((m, _)) = manifest
            .measurements
            .iter()
            .zip(&prepared)
            .find(|(_, p)| p.randomized)
        {
            return Err(CliError::Validation(format!(
                "measurement {} is randomized and needs a seed (--seed)",
                m.id
            )));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Validation(format!("worker pool: {e}")))?;
    let results: Vec<(Result<Outcome, CliError>, u128)> = pool.install(|| {
        manifest
            .measurements
            .par_iter()
            .zip(prepared.par_iter())
            .map(|(m, p)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0) ^ fnv1a(&m.id));
                let start = Instant::now();
                let out = (p.task)(&mut rng);
                (out, start.elapsed().as_millis())
            })
            .collect()
    });

    let mut entries = Vec::new();
    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut timings = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(format!("csv: {e}"));
    csv.write_record([
        "schema",
        "experiment",
        "measurement",
        "op",
        "params",
        "value",
        "radius",
        "holds",
        "pass",
    ])
    .map_err(io)?;
    timings
        .write_record(["experiment", "measurement", "op", "runtime_ms"])
        .map_err(io)?;
    let (mut all_pass, mut worst_error) = (true, EXIT_OK);
    for (m, (res, ms)) in manifest.measurements.iter().zip(results) {
        let params = measurement_params(m);
        timings
            .write_record([&manifest.id, &m.id, m.op.name(), &ms.to_string()])
            .map_err(io)?;
        match res {
            Ok(out) => {
                let cs = checks(&m.expect, &out);
                let pass = cs.iter().all(|c| c.pass);
                all_pass &= pass;
                csv.write_record([
                    CSV_SCHEMA.to_string(),
                    manifest.id.clone(),
                    m.id.clone(),
                    m.op.name().to_string(),
                    params.to_string(),
                    out.value.to_string(),
                    out.radius.to_string(),
                    out.holds.map_or(String::new(), |h| h.to_string()),
                    pass.to_string(),
                ])
                .map_err(io)?;
                entries.push(json!({
                    "id": m.id,
                    "op": m.op.name(),
                    "params": params,
                    "value": out.value,
                    "radius": out.radius,
                    "holds": out.holds,
                    "checks": cs,
                    "pass": pass,
                    "result": out.detail,
                }));
            }
            Err(e) => {
                all_pass = false;
                let code = e.exit_code();
                worst_error = if worst_error == EXIT_VALIDATION || code == EXIT_VALIDATION {
                    EXIT_VALIDATION
                } else {
                    EXIT_BUDGET
                };
                csv.write_record([
                    CSV_SCHEMA.to_string(),
                    manifest.id.clone(),
                    m.id.clone(),
                    m.op.name().to_string(),
                    params.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "false".to_string(),
                ])
                .map_err(io)?;
                entries.push(json!({
                    "id": m.id,
                    "op": m.op.name(),
                    "params": params,
                    "error": error_json(&e),
                    "pass": false,
                }));
            }
        }
    }
    let report = json!({
        "schema": CSV_SCHEMA,
        "experiment": manifest.id,
        "seed": seed,
        "config": {
            "manifest": manifest,
            "generators": generators,
            "limits": limits(),
            "version": env!("CARGO_PKG_VERSION"),
        },
        "measurements": entries,
        "pass": all_pass,
    });
    let exit_code = if worst_error != EXIT_OK {
        worst_error
    } else if all_pass {
        EXIT_OK
    } else {
        EXIT_CHECK
    };
    let finish = |w: csv::Writer<Vec<u8>>| {
        String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?)
            .map_err(|e| CliError::Io(e.to_string()))
    };
    Ok(RunOutcome {
        report: serde_json::to_string_pretty(&report)? + "\n",
        csv: finish(csv)?,
        timings: finish(timings)?,
        pass: all_pass,
        exit_code,
    })
}

fn error_json(e: &CliError) -> Value {
    let msg = e.to_string();
    let kind = match msg.split_once(": ") {
        Some((k, _)) if k.chars().all(|c| c.is_ascii_alphanumeric()) => k.to_string(),
        _ => match e {
            CliError::Validation(_) => "ValidationError",
            CliError::Budget(_) => "BudgetExceeded",
            CliError::Io(_) => "IoError",
        }
        .to_string(),
    };
    json!({ "kind": kind, "message": msg })
}

fn measurement_params(m: &Measurement) -> Value {
    let mut v = to_value(&m.op);
    if let Value::Object(o) = &mut v {
        o.remove("op");
    }
    v
}

/// Run one operation outside a manifest; returns its report entry and the
/// exit code it would get inside a run.
pub fn run_op(op: Op, seed: Option<u64>) -> Result<(Value, i32), CliError> {
    let manifest = Manifest {
        id: op.name().to_string(),
        seed,
        outputs: Default::default(),
        functions: BTreeMap::new(),
        generators: BTreeMap::new(),
        classes: BTreeMap::new(),
        extractors: BTreeMap::new(),
        measurements: vec![Measurement {
            id: op.name().to_string(),
            op,
            expect: None,
        }],
    };
    let out = execute(
        &manifest,
        &RunOptions {
            seed,
            threads: None,
            out_dir: None,
        },
    )?;
    let mut report: Value = serde_json::from_str(&out.report)?;
    Ok((report["measurements"][0].take(), out.exit_code))
}
