//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use pseudolab::corr::{self, AdversaryClass};
use pseudolab::extract::{certify_seeded, parity_blocks_word, BitFixingSource, Extractor};
use pseudolab::gf2::FieldSpec;
use pseudolab::hardfn::{ExtFfm, FunctionDescriptor, Gip, Rw};
use pseudolab::models::*;
use pseudolab::prg::*;
use pseudolab::Bits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn clmul(a: u64, b: u64) -> u64 {
    (0..64)
        .filter(|i| b >> i & 1 == 1)
        .fold(0, |acc, i| acc ^ a << i)
}

fn reduce(mut x: u64, modulus: u64, w: u32) -> u64 {
    for i in (w..64).rev() {
        if x >> i & 1 == 1 {
            x ^= modulus << (i - w);
        }
    }
    x
}

fn c1_fields() -> Outcome {
    let f = FieldSpec::default_for(8).map_err(err)?;
    let modulus = f.modulus() as u64;
    ensure(modulus == 0x11b, || format!("F_256 modulus {modulus:#x}"))?;
    for a in 0..256u64 {
        for b in 0..256u64 {
            let want = reduce(clmul(a, b), modulus, 8);
            ensure(f.mul_raw(a, b) == want, || format!("{a} * {b}"))?;
        }
    }
    for w in [2u32, 4] {
        let f = FieldSpec::default_for(w).map_err(err)?;
        let q = 1u64 << w;
        let m = |a, b| f.mul_raw(a, b);
        for a in 0..q {
            ensure(m(a, 1) == a && m(a, 0) == 0, || {
                format!("identity at {a} in F_{q}")
            })?;
            if a != 0 {
                let inv = f.inv_raw(a).ok_or(format!("no inverse for {a}"))?;
                ensure(m(a, inv) == 1, || format!("inverse of {a} in F_{q}"))?;
                ensure((1..q).filter(|&b| m(a, b) == 1).count() == 1, || {
                    format!("inverse of {a} not unique")
                })?;
            }
            for b in 0..q {
                ensure(m(a, b) == m(b, a), || format!("commutativity {a},{b}"))?;
                for c in 0..q {
                    ensure(m(m(a, b), c) == m(a, m(b, c)), || {
                        format!("associativity {a},{b},{c}")
                    })?;
                    ensure(m(a, b ^ c) == m(a, b) ^ m(a, c), || {
                        format!("distributivity {a},{b},{c}")
                    })?;
                }
            }
        }
    }
    Ok("65536 products match the schoolbook oracle; F_4 and F_16 axioms hold".into())
}

fn c2_rw() -> Outcome {
    let mut cases = 0;
    for m in 1..=16usize {
        for k in 1..=16 / m {
            for r in 1..=16 / (m * k) {
                let rw = Rw::new(m, k, r).map_err(err)?;
                let gip = Gip::new(m, k).map_err(err)?;
                let len = m * k * r;
                for x in 0..1u64 << len {
                    let y = (0..k).fold(0u64, |acc, j| {
                        let block = x >> (j * m * r) & ((1u64 << (m * r)) - 1);
                        acc | parity_blocks_word(m, r, block) << (j * m)
                    });
                    let direct = (0..m).fold(false, |s, i| {
                        s ^ (0..k).all(|j| {
                            (0..r).fold(false, |p, l| p ^ (x >> (j * m * r + i * r + l) & 1 == 1))
                        })
                    });
                    let composed =
                        (0..m).fold(false, |s, i| s ^ (0..k).all(|j| y >> (j * m + i) & 1 == 1));
                    ensure(
                        rw.eval(x) == direct && gip.eval(y) == composed && direct == composed,
                        || format!("RW_{{{m},{k},{r}}} at {x:#b}"),
                    )?;
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} parameter triples, all inputs"))
}

fn c3_parity() -> Outcome {
    let n = 8;
    let parity = FunctionDescriptor::Parity {
        n,
        mask: None,
        negate: false,
    }
    .build()
    .map_err(err)?;
    let mut juntas = 0u64;
    for support in 0..1u64 << n {
        let w = support.count_ones() as usize;
        if w > 3 {
            continue;
        }
        let vars: Vec<usize> = (0..n).filter(|&i| support >> i & 1 == 1).collect();
        for table in 0..1u64 << (1 << w) {
            let agree: i64 = (0..1u64 << n)
                .map(|x| {
                    let v = vars
                        .iter()
                        .enumerate()
                        .fold(0, |a, (j, &i)| a | (x >> i & 1) << j);
                    let g = table >> v & 1;
                    if (x.count_ones() as u64 & 1) == g {
                        1
                    } else {
                        -1
                    }
                })
                .sum();
            ensure(agree == 0, || format!("support {vars:?} table {table:#x}"))?;
            juntas += 1;
        }
    }
    let lib = corr::corr_class_max(
        &*parity,
        &AdversaryClass::Juntas {
            n,
            width: 3,
            supports: None,
        },
    )
    .map_err(err)?;
    ensure(lib.value == 0.0, || format!("class max {}", lib.value))?;
    Ok(format!(
        "{juntas} (support, table) pairs, max correlation 0"
    ))
}

fn c4_l1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4c31);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let t = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=10usize);
        let b = BranchingProgram2::random(1, t, n, &mut rng).map_err(err)?;
        let size = 1u64 << n;
        let oracle: u64 = (0..size)
            .map(|s| {
                (0..size)
                    .filter(|&x| b.eval(x))
                    .map(|x| {
                        if (s & x).count_ones() & 1 == 1 {
                            -1i64
                        } else {
                            1
                        }
                    })
                    .sum::<i64>()
                    .unsigned_abs()
            })
            .sum();
        let lib = fourier_expand(&b).map_err(err)?.l1_numerator();
        ensure(lib == oracle, || {
            format!("L1 numerator {lib} vs oracle {oracle}")
        })?;
        ensure(2 * oracle <= (t as u64 + 1) * size, || {
            format!("L1 {} > (t+1)/2 at t={t}", oracle as f64 / size as f64)
        })?;
        worst = worst.max(oracle as f64 / size as f64 / ((t as f64 + 1.0) / 2.0));
    }
    Ok(format!("200 programs, worst L1 / ((t+1)/2) = {worst}"))
}

fn walk(b: &BranchingProgram2, x: u64) -> bool {
    let mut v = 0u8;
    for layer in b.layers() {
        let node = &layer[v as usize];
        let idx = node
            .reads
            .iter()
            .enumerate()
            .fold(0usize, |a, (j, &i)| a | ((x >> i & 1) as usize) << j);
        v = node.table[idx];
    }
    v == 1
}

fn c5_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbd51);
    for p in 0..100 {
        let b = BranchingProgram2::random(3, 5, 12, &mut rng).map_err(err)?;
        let dec = decompose_2bp(&b).map_err(err)?;
        for x in 0..1u64 << 12 {
            let direct = walk(&b, x);
            ensure(b.eval(x) == direct, || {
                format!("program {p}: library evaluation differs at {x}")
            })?;
            ensure(dec.core.eval(dec.phi(x)) == direct, || {
                format!("program {p}: decomposition differs at {x}")
            })?;
        }
    }
    Ok("100 programs, 4096 inputs each".into())
}

fn r2_oracle(f: impl Fn(u64, u64) -> bool) -> f64 {
    let mut sum = 0i64;
    for t in 0..16u64 {
        let (x0, x1, y0, y1) = (t & 1, t >> 1 & 1, t >> 2 & 1, t >> 3 & 1);
        let e = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
            .iter()
            .filter(|&&(x, y)| f(x, y))
            .count();
        sum += if e % 2 == 0 { 1 } else { -1 };
    }
    sum as f64 / 16.0
}

fn c6_norm() -> Outcome {
    let ip = FunctionDescriptor::Ip { n: 2 }.build().map_err(err)?;
    let zero = FunctionDescriptor::Parity {
        n: 2,
        mask: Some(0),
        negate: false,
    }
    .build()
    .map_err(err)?;
    let r_ip = corr::kparty_norm(&*ip, 2, 1).map_err(err)?;
    let r_zero = corr::kparty_norm(&*zero, 2, 1).map_err(err)?;
    ensure(r_ip == 0.5 && r2_oracle(|x, y| x & y == 1) == 0.5, || {
        format!("R2(IP1) = {r_ip}")
    })?;
    ensure(r_zero == 1.0 && r2_oracle(|_, _| false) == 1.0, || {
        format!("R2(0) = {r_zero}")
    })?;
    // one-bit protocols on 1-bit blocks: 0, 1, x, not x, y, not y
    let protocols: [fn(u64) -> bool; 6] = [
        |_| false,
        |_| true,
        |x| x & 1 == 1,
        |x| x & 1 == 0,
        |x| x & 2 == 2,
        |x| x & 2 == 0,
    ];
    let best = protocols
        .iter()
        .map(|g| {
            ((0..4u64)
                .map(|x| if ip.eval(x) == g(x) { 1i64 } else { -1 })
                .sum::<i64>())
            .abs() as f64
                / 4.0
        })
        .fold(0.0, f64::max);
    let lib = corr::corr_class_max(&*ip, &AdversaryClass::Nof1Bit { b: 1 })
        .map_err(err)?
        .value;
    ensure(lib == best, || format!("class max {lib} vs oracle {best}"))?;
    let upper = 2.0 * r_ip.powf(0.25);
    ensure(r_ip <= best && best <= upper, || {
        format!("{r_ip} <= {best} <= {upper} fails")
    })?;
    Ok(format!(
        "R2(IP1) = 0.5, R2(0) = 1, {r_ip} <= {best} <= {upper:.4}"
    ))
}

fn c7_lhl() -> Outcome {
    let (n, k, eps) = (8usize, 5usize, 0.25);
    let ext = Extractor::toeplitz(n, 1).map_err(err)?;
    let sources = BitFixingSource::all(n, k).map_err(err)?;
    let outcomes: Vec<Vec<u64>> = sources.iter().map(|s| s.outcomes().collect()).collect();
    let seeds = 1u64 << ext.seed_len();
    let half = 1i64 << (k - 1);
    // per source: sum over seeds of |ones - 2^(k-1)|, and count of seeds with TV <= eps
    let mut dev = vec![0u64; sources.len()];
    let mut good = vec![0u64; sources.len()];
    for s in 0..seeds {
        let fixed = ext
            .fix_seed(&Bits::from_u64(s, ext.seed_len()))
            .map_err(err)?;
        for (i, xs) in outcomes.iter().enumerate() {
            let ones = xs.iter().filter(|&&x| fixed.apply(x) == 1).count() as i64;
            let d = (ones - half).unsigned_abs();
            dev[i] += d;
            good[i] += (d as f64 / (1u64 << k) as f64 <= eps) as u64;
        }
    }
    let avg = dev
        .iter()
        .map(|&d| d as f64 / (seeds << k) as f64)
        .fold(0.0, f64::max);
    let min_good = good
        .iter()
        .map(|&g| g as f64 / seeds as f64)
        .fold(1.0, f64::min);
    ensure(avg <= eps, || format!("seed-averaged TV {avg} > {eps}"))?;
    ensure(min_good >= 1.0 - eps, || {
        format!("good-seed fraction {min_good} < {}", 1.0 - eps)
    })?;
    let lib = certify_seeded(&ext, &sources, eps).map_err(err)?;
    ensure(
        lib.average_ok
            && lib.strong_ok
            && lib.max_average_tv == avg
            && lib.min_good_fraction == min_good,
        || format!("library report disagrees with the tally: {lib:?}"),
    )?;
    Ok(format!(
        "{} sources x {seeds} seeds: max averaged TV {avg}, min good fraction {min_good}",
        sources.len()
    ))
}

fn c8_nw() -> Outcome {
    let bent = FunctionDescriptor::Sparse(
        SparsePolyF2::from_masks(4, [0b0011, 0b1100], false).map_err(err)?,
    );
    let h = bent.build().map_err(err)?;
    let affine_corr = |f: &dyn Fn(u64) -> bool, n: usize| {
        (0..2u64 << n)
            .map(|i| {
                let s: i64 = (0..1u64 << n)
                    .map(|x| {
                        let g = (((i >> 1) & x).count_ones() & 1 == 1) ^ (i & 1 == 1);
                        if f(x) == g {
                            1
                        } else {
                            -1
                        }
                    })
                    .sum();
                s.abs() as f64 / (1u64 << n) as f64
            })
            .fold(0.0, f64::max)
    };
    let eps_h = affine_corr(&|x| h.eval(x), 4);
    let lib_eps = corr::corr_class_max(&*h, &AdversaryClass::Affine { n: 4 })
        .map_err(err)?
        .value;
    ensure(eps_h == lib_eps, || {
        format!("hardness {lib_eps} vs oracle {eps_h}")
    })?;
    let count = 3;
    let design = smallest_design(count, 4, 1, DEFAULT_NODE_BUDGET).map_err(err)?;
    let s = design.universe();
    let g = NwGenerator::new(design, bent).map_err(err)?;
    let mut worst = 0.0f64;
    for i in 0..2u64 << count {
        let (a, c) = (i >> 1, i & 1 == 1);
        let bias = |y: u64| {
            if ((a & y).count_ones() & 1 == 1) ^ c {
                -1i64
            } else {
                1
            }
        };
        let gen: i64 = (0..1u64 << s).map(|seed| bias(g.expand_u64(seed))).sum();
        let uni: i64 = (0..1u64 << count).map(bias).sum();
        let gap = (gen as f64 / (1u64 << s) as f64 - uni as f64 / (1u64 << count) as f64).abs();
        worst = worst.max(gap);
    }
    let lib = corr::max_fooling_error(&g, &AdversaryClass::Affine { n: count })
        .map_err(err)?
        .value;
    ensure(lib == worst, || {
        format!("fooling error {lib} vs oracle {worst}")
    })?;
    let bound = count as f64 * eps_h;
    ensure(worst <= bound, || {
        format!("fooling error {worst} > {bound}")
    })?;
    Ok(format!(
        "eps_h = {eps_h}, fooling error {worst} <= {count} * eps_h = {bound}"
    ))
}

fn c9_extffm() -> Outcome {
    let mut lines = Vec::new();
    for nd in [2usize, 3] {
        let field = FieldSpec::default_for(nd as u32).map_err(err)?;
        let ext = Extractor::toeplitz(nd, nd).map_err(err)?;
        let f = ExtFfm::new(2, ext, field).map_err(err)?;
        let eps = certify_seeded(&ext, &BitFixingSource::all(nd, nd).map_err(err)?, 0.25)
            .map_err(err)?
            .measured_epsilon;
        let n = f.arity();
        let partition = Partition::new(vec![
            (0..nd).collect(),
            (nd..2 * nd).collect(),
            (2 * nd..n).collect(),
        ])
        .map_err(err)?;
        let class = AdversaryClass::SetMultilinear {
            partition,
            max_degree: 1,
        };
        let rep = corr::check_extffm_bound(&f, 2, nd, eps, &class).map_err(err)?;
        // degree-1 set-multilinear polynomials are exactly the affine functions
        let oracle = (0..2u64 << n)
            .map(|i| {
                let s: i64 = (0..1u64 << n)
                    .map(|x| {
                        let g = (((i >> 1) & x).count_ones() & 1 == 1) ^ (i & 1 == 1);
                        if f.eval(x) == g {
                            1
                        } else {
                            -1
                        }
                    })
                    .sum();
                s.abs() as f64 / (1u64 << n) as f64
            })
            .fold(0.0, f64::max);
        let bound = 2.0 * eps + 1.0 / ((1u64 << nd) as f64 * eps * eps) + eps;
        ensure(rep.measured == oracle, || {
            format!("n/d={nd}: measured {} vs oracle {oracle}", rep.measured)
        })?;
        ensure((rep.bound - bound).abs() < 1e-12, || {
            format!("n/d={nd}: bound {} vs {bound}", rep.bound)
        })?;
        ensure(rep.pass && oracle <= bound, || {
            format!("n/d={nd}: {oracle} > {bound}")
        })?;
        lines.push(format!("n/d={nd}: {oracle} <= {bound:.4} (eps {eps})"));
    }
    Ok(lines.join("; "))
}

fn c10_simplification() -> Outcome {
    let trials = 10_000usize;
    let mut lines = Vec::new();
    for (d, terms, seed) in [(2u64, 8usize, 0x5a02u64), (4, 4, 0x5a04)] {
        let (n, delta) = (16usize, 0.5);
        let s = PseudoRestrictionSampler::new(n, d, delta, EllRule::UnionBound { terms })
            .map_err(err)?;
        let ell = s.ell();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0usize;
        for _ in 0..trials {
            let f = XorOfJuntas::random(n, d as usize, terms, &mut rng).map_err(err)?;
            let seed =
                Bits::from_bools(&(0..s.seed_len()).map(|_| rng.gen()).collect::<Vec<bool>>());
            let rho = s.sample(&seed).map_err(err)?;
            let star = rho.star_mask();
            let mut ok = true;
            for j in f.terms() {
                let alive = j.support().iter().filter(|&&i| star >> i & 1 == 1).count();
                let width = j.restricted_support(&rho).map_err(err)?.len();
                ensure(width <= alive, || {
                    format!("restricted width {width} above alive count {alive}")
                })?;
                ok &= width <= ell;
            }
            hits += ok as usize;
        }
        let freq = hits as f64 / trials as f64;
        let threshold = 1.0 - delta - 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt();
        ensure(freq >= threshold, || {
            format!("d={d}: frequency {freq} < {threshold}")
        })?;
        lines.push(format!("d={d} l={ell}: {freq} >= {threshold}"));
    }
    Ok(lines.join("; "))
}

fn c11_bp2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb911);
    let mut worst_ratio = 0.0f64;
    for n in [10usize, 14] {
        let g = bp2_prg(n, 2, 3, 0.5, &JuntaConstants::default()).map_err(err)?;
        let seeds = 1u64 << g.seed_len();
        for p in 0..5 {
            let b = BranchingProgram2::random(2, 3, n, &mut rng).map_err(err)?;
            let dec = decompose_2bp(&b).map_err(err)?;
            let uni = (0..1u64 << n).filter(|&x| walk(&b, x)).count() as f64 / (1u64 << n) as f64;
            let gen =
                (0..seeds).filter(|&s| walk(&b, g.expand_u64(s))).count() as f64 / seeds as f64;
            let gap = (uni - gen).abs();
            let lib = corr::fooling_error(&g, &b).map_err(err)?.value;
            ensure(lib == 2.0 * gap, || {
                format!(
                    "n={n} program {p}: fooling error {lib} vs oracle {}",
                    2.0 * gap
                )
            })?;
            let (eps_j, _) = corr::xor_subset_error(&g, &dec.juntas).map_err(err)?;
            let l1 = fourier_expand(&dec.core).map_err(err)?.l1();
            ensure(gap <= eps_j * l1, || {
                format!("n={n} program {p}: gap {gap} > {eps_j} * {l1}")
            })?;
            if eps_j * l1 > 0.0 {
                worst_ratio = worst_ratio.max(gap / (eps_j * l1));
            }
        }
    }
    Ok(format!(
        "10 programs at n in {{10, 14}}, worst gap / (eps_J * L1) = {worst_ratio:.4}"
    ))
}

fn run_suite(dir: &Path, threads: usize) -> Result<(Vec<u8>, Vec<u8>), String> {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests/paper-suite.json");
    let status = Command::new(env!("CARGO_BIN_EXE_pseudolab"))
        .args(["run", "--manifest"])
        .arg(&manifest)
        .arg("--out-dir")
        .arg(dir)
        .args(["--threads", &threads.to_string()])
        .stderr(Stdio::null())
        .status()
        .map_err(err)?;
    ensure(status.code() == Some(0), || {
        format!("paper-suite exited with {status}")
    })?;
    let read = |f: &str| std::fs::read(dir.join(f)).map_err(err);
    Ok((read("report.json")?, read("results.csv")?))
}

fn c12_reproducible() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let a = run_suite(&tmp.path().join("a"), 1)?;
    let b = run_suite(&tmp.path().join("b"), 1)?;
    let c = run_suite(&tmp.path().join("c"), 8)?;
    ensure(a == b, || "two runs with one worker differ".into())?;
    ensure(a == c, || "one worker and eight workers differ".into())?;
    Ok(format!(
        "report {} bytes and CSV {} bytes identical over 3 runs",
        a.0.len(),
        a.1.len()
    ))
}

fn main() {
    let criteria: [(u32, Duration, fn() -> Outcome); 12] = [
        (1, Duration::from_secs(5), c1_fields),
        (2, Duration::from_secs(30), c2_rw),
        (3, Duration::from_secs(60), c3_parity),
        (4, Duration::from_secs(60), c4_l1),
        (5, Duration::from_secs(60), c5_decomposition),
        (6, Duration::from_secs(10), c6_norm),
        (7, Duration::from_secs(300), c7_lhl),
        (8, Duration::from_secs(300), c8_nw),
        (9, Duration::from_secs(600), c9_extffm),
        (10, Duration::from_secs(300), c10_simplification),
        (11, Duration::from_secs(600), c11_bp2),
        (12, Duration::from_secs(1800), c12_reproducible),
    ];
    let mut failed = 0;
    for (id, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (
                false,
                format!("{d}; runtime above the {} s limit", limit.as_secs()),
            ),
            Err(e) => (false, e),
        };
        failed += !ok as u32;
        println!(
            "criterion {id}: {} ({detail}; {:.2} s of {} s)",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
