use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pseudolab::corr::AdversaryClass;
use pseudolab::extract::Extractor;
use pseudolab::gf2::FieldSpec;
use pseudolab::hardfn::FunctionDescriptor;
use pseudolab::models::BooleanFunction;
use pseudolab::prg::JuntaConstants;
use pseudolab::Bits;
use pseudolab_cli::manifest::{GeneratorSpec, Op, Ref};
use pseudolab_cli::run::{build_generator, run_op};
use pseudolab_cli::{dist, run_manifest, CliError, RunOptions, EXIT_OK};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(
    name = "pseudolab",
    version,
    about = "Pseudorandomness and correlation experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every measurement of a JSON manifest and write report.json, results.csv and timings.csv.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Overrides the manifest seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Evaluate a function on one input (bit i of the input is character i).
    Eval {
        #[command(flatten)]
        f: FnArgs,
        #[arg(long)]
        input: String,
    },
    /// Correlation of two functions, exact or Monte-Carlo.
    Corr {
        /// Function descriptor, as JSON or @file.
        #[arg(long)]
        f: String,
        /// Second function descriptor; use --class for a class maximum instead.
        #[arg(long, conflicts_with = "class")]
        g: Option<String>,
        /// Adversary class, as JSON or @file.
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// k-party norm of a function on k blocks of b bits.
    Norm {
        #[command(flatten)]
        f: FnArgs,
        #[arg(long = "parties")]
        parties: usize,
        #[arg(long = "block")]
        block: usize,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Total variation distance between two distributions
    /// (uniform:B, point:X[:B], counts:c0,c1,...).
    Tv {
        #[arg(long)]
        dist_a: String,
        #[arg(long)]
        dist_b: String,
    },
    /// Stream generator outputs for external statistical tests.
    PrgGen {
        /// Generator descriptor or recipe, as JSON or @file.
        #[arg(long)]
        generator: String,
        #[arg(long, default_value_t = 16)]
        count: u64,
        /// Draw seeds at random from this RNG seed; without it seeds are enumerated from 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Bits)]
        format: Format,
    },
    /// Fooling error of a generator against a function, a class, or (with
    /// --lifting) random width-2 programs.
    PrgTest {
        #[arg(long, required_unless_present = "lifting")]
        generator: Option<String>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        lifting: bool,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        t: usize,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 5)]
        programs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build a combinatorial design; without --universe the smallest one found is reported.
    Design {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        universe: Option<usize>,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Certify a seeded extractor against all bit-fixing sources with `free` free bits.
    ExtractorTest {
        /// Extractor as JSON or @file, e.g. {"family":"lhl","n":8,"m":1}.
        #[arg(long)]
        extractor: String,
        #[arg(long)]
        free: usize,
        #[arg(long)]
        epsilon: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Bits,
    Hex,
    Binary,
}

#[derive(Args)]
struct FnArgs {
    /// Named family: parity, ip, gip, rw, ffm.
    #[arg(long = "fn", conflicts_with = "descriptor")]
    family: Option<String>,
    /// Full function descriptor, as JSON or @file.
    #[arg(long)]
    descriptor: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    width: Option<u32>,
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("missing --{flag}")))
}

impl FnArgs {
    fn descriptor(&self) -> Result<FunctionDescriptor, CliError> {
        if let Some(d) = &self.descriptor {
            return parse_json(d);
        }
        let family = need(self.family.as_deref(), "fn or --descriptor")?;
        Ok(match family {
            "parity" => FunctionDescriptor::Parity {
                n: need(self.n, "n")?,
                mask: None,
                negate: false,
            },
            "ip" => FunctionDescriptor::Ip {
                n: need(self.n, "n")?,
            },
            "gip" => FunctionDescriptor::Gip {
                m: need(self.m, "m")?,
                k: need(self.k, "k")?,
            },
            "rw" => FunctionDescriptor::Rw {
                m: need(self.m, "m")?,
                k: need(self.k, "k")?,
                r: need(self.r, "r")?,
            },
            "ffm" => FunctionDescriptor::Ffm {
                d: need(self.d, "d")?,
                field: FieldSpec::default_for(need(self.width, "width")?)?,
            },
            other => {
                return Err(CliError::Validation(format!(
                    "unknown function family {other:?}"
                )))
            }
        })
    }
}

fn parse_json<T: DeserializeOwned>(arg: &str) -> Result<T, CliError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?
        }
        None => arg.to_string(),
    };
    Ok(serde_json::from_str(&text)?)
}

fn print_entry((entry, code): (serde_json::Value, i32)) -> Result<i32, CliError> {
    println!("{}", serde_json::to_string_pretty(&entry)?);
    Ok(code)
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Run {
            manifest,
            seed,
            out_dir,
            threads,
        } => {
            let out = run_manifest(
                &manifest,
                &RunOptions {
                    seed,
                    threads: Some(threads),
                    out_dir: Some(out_dir),
                },
            )?;
            eprintln!(
                "{}",
                if out.pass {
                    "all measurements passed"
                } else {
                    "some measurements failed"
                }
            );
            Ok(out.exit_code)
        }
        Cmd::Eval { f, input } => {
            let func = f.descriptor()?.build()?;
            let x: Bits = input.trim().parse()?;
            println!("{}", func.eval_bits(&x)? as u8);
            Ok(EXIT_OK)
        }
        Cmd::Corr {
            f,
            g,
            class,
            samples,
            seed,
        } => {
            let f = Ref::Inline(parse_json(&f)?);
            let op = match (g, class) {
                (Some(g), _) => {
                    let g = Ref::Inline(parse_json(&g)?);
                    match samples {
                        Some(samples) => Op::CorrMc { f, g, samples },
                        None => Op::CorrExact { f, g },
                    }
                }
                (None, Some(c)) => Op::CorrClassMax {
                    f,
                    class: Ref::Inline(parse_json::<AdversaryClass>(&c)?),
                    budget: None,
                },
                (None, None) => {
                    return Err(CliError::Validation("corr needs --g or --class".into()))
                }
            };
            print_entry(run_op(op, seed)?)
        }
        Cmd::Norm {
            f,
            parties,
            block,
            samples,
            seed,
        } => print_entry(run_op(
            Op::KpartyNorm {
                f: Ref::Inline(f.descriptor()?),
                k: parties,
                b: block,
                samples,
            },
            seed,
        )?),
        Cmd::Tv { dist_a, dist_b } => {
            let (a, b) = dist::pair(&dist_a, &dist_b)?;
            println!("{}", pseudolab::corr::tv_distance(&a, &b)?);
            Ok(EXIT_OK)
        }
        Cmd::PrgGen {
            generator,
            count,
            seed,
            format,
        } => {
            let g = build_generator(&parse_json::<GeneratorSpec>(&generator)?)?;
            let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
            let (s, n) = (g.seed_len(), g.output_len());
            if rng.is_none() && s < 64 && count > 1u64 << s {
                return Err(CliError::Validation(format!(
                    "only {} seeds of length {s}",
                    1u64 << s
                )));
            }
            let stdout = std::io::stdout();
            let mut out = std::io::BufWriter::new(stdout.lock());
            for i in 0..count {
                let seed = match rng.as_mut() {
                    Some(r) => {
                        Bits::from_bools(&(0..s).map(|_| r.gen::<bool>()).collect::<Vec<_>>())
                    }
                    None => Bits::from_u64(i, s),
                };
                let y = g.expand(&seed);
                match format {
                    Format::Bits => writeln!(out, "{}", Bits::from_u64(y, n))?,
                    Format::Hex => writeln!(out, "{y:0width$x}", width = n.div_ceil(4))?,
                    Format::Binary => out.write_all(&y.to_le_bytes()[..n.div_ceil(8)])?,
                }
            }
            out.flush()?;
            Ok(EXIT_OK)
        }
        Cmd::PrgTest {
            generator,
            f,
            class,
            lifting,
            n,
            d,
            t,
            epsilon,
            programs,
            seed,
        } => {
            let op = if lifting {
                Op::Bp2Lifting {
                    n,
                    d,
                    t,
                    epsilon,
                    programs,
                    constants: JuntaConstants::default(),
                }
            } else {
                let generator =
                    Ref::Inline(parse_json::<GeneratorSpec>(&need(generator, "generator")?)?);
                match (f, class) {
                    (Some(f), None) => Op::FoolingError {
                        generator,
                        f: Ref::Inline(parse_json(&f)?),
                    },
                    (None, Some(c)) => Op::MaxFoolingError {
                        generator,
                        class: Ref::Inline(parse_json(&c)?),
                    },
                    _ => {
                        return Err(CliError::Validation(
                            "prg-test needs exactly one of --f, --class, --lifting".into(),
                        ))
                    }
                }
            };
            print_entry(run_op(op, seed)?)
        }
        Cmd::Design {
            count,
            universe,
            r,
            k,
            budget,
        } => print_entry(run_op(
            Op::Design {
                count,
                universe,
                r,
                k,
                budget,
            },
            None,
        )?),
        Cmd::ExtractorTest {
            extractor,
            free,
            epsilon,
        } => print_entry(run_op(
            Op::ExtractorCertify {
                extractor: Ref::Inline(parse_json::<Extractor>(&extractor)?),
                free,
                epsilon,
            },
            None,
        )?),
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
