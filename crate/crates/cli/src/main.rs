use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use vervaat::closed_forms::{DensitySpec, Family};
use vervaat::lattice::discrete_checks;
use vervaat::minorant::{convex_minorant, segment_count_stats};
use vervaat::path::fmt17;
use vervaat::samplers::{run_replicates, Process, SamplerSpec};
use vervaat::verify::{run_suite, ExperimentId, RunSettings, Thresholds, DEFAULT_SEED, SCHEMA};
use vervaat::Path;

#[derive(Parser)]
#[command(name = "vervaat", version, about = "Vervaat transforms of Brownian paths: exact laws, samplers, closed forms and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact law of the first return of the Vervaat transform of simple-walk bridges.
    ///
    /// Prints JSON {schema, n, a, pmf: [{l, num, den}], bijection_ok, uniform_helper_ok, factorization_ok}.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
    },
    /// Sample grid paths.
    ///
    /// CSV output: columns `t,value`, one block per path separated by a blank
    /// line. With --marginals the CSV has columns `rep,<t1>,<t2>,...`, one row
    /// per replicate.
    Sample {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        seed: SeedArg,
        /// Path values at these times instead of whole paths.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        marginals: Option<Vec<f64>>,
        /// Output file, stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a density and its CDF.
    ///
    /// CSV columns: `x,density,cdf`, on `grid` equally spaced points of the
    /// support (truncated at --xmax for unbounded supports).
    Density {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Marginal time (meander, excursion).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        x0: Option<f64>,
        /// Bessel(3) bridge start, end, length and time.
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        len: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = 4.0)]
        xmax: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convex minorants of sampled or supplied paths.
    ///
    /// Prints JSON: a list of {n_segments, slopes, vertices}, or with
    /// --aggregate the segment-count histogram and the last slopes.
    Minorant {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[command(flatten)]
        seed: SeedArg,
        /// Read paths from a CSV written by `sample` instead of sampling.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        aggregate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification experiments and write a JSON report.
    ///
    /// Exit code 1 if any experiment fails.
    Verify {
        /// Experiment id, or `all`.
        #[arg(long, default_value = "all")]
        experiment: String,
        #[command(flatten)]
        seed: SeedArg,
        /// Replicates, overriding each experiment's default.
        #[arg(long)]
        reps: Option<usize>,
        /// Grid size, overriding each experiment's default.
        #[arg(long)]
        grid: Option<usize>,
        /// JSON file with pass/fail thresholds.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Keep wall times in the report (makes it run-dependent).
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SeedArg {
    /// Master seed; falls back to VERVAAT_SEED, then 7.
    #[arg(long, env = "VERVAAT_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long, default_value = "bm")]
    process: Process,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

impl SamplerArgs {
    fn spec(&self) -> SamplerSpec {
        SamplerSpec { process: self.process, lambda: self.lambda, duration: self.duration, n: self.grid }
    }

    fn run(&self, seed: u64) -> Result<Vec<Path>> {
        let spec = self.spec();
        spec.validate()?;
        let label = format!("sample/{}", spec.process.name());
        run_replicates(seed, &label, self.reps, |r| spec.sample::<f64>(r)).into_iter().map(|p| Ok(p?)).collect()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Fz,
    Fa,
    Fzhat,
    FzConditioned,
    Arcsine,
    Rayleigh,
    Meander,
    Excursion,
    Bes3Bridge,
    Nonmarkov1,
    Nonmarkov2,
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.with_context(|| format!("this family needs --{name}"))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: &Option<PathBuf>, v: &Value) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

enum Outcome {
    Ok,
    Failed,
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Enumerate { n, a } => {
            let c = discrete_checks(n, a)?;
            let pmf: Vec<Value> = c
                .pmf
                .iter()
                .map(|(l, m)| json!({"l": l, "num": m.numer().to_string(), "den": m.denom().to_string()}))
                .collect();
            write_json(
                &None,
                &json!({
                    "schema": SCHEMA,
                    "n": n,
                    "a": a,
                    "pmf": pmf,
                    "pmf_matches_enumeration": c.pmf_matches_enumeration,
                    "bijection_ok": c.bijection_ok,
                    "uniform_helper_ok": c.uniform_helper_ok,
                    "factorization_ok": c.factorization_ok,
                }),
            )?;
        }
        Command::Sample { sampler, seed, marginals, out } => {
            let paths = sampler.run(seed.seed)?;
            let mut w = output(&out)?;
            match marginals {
                Some(times) => {
                    for &t in &times {
                        if !(0.0..=sampler.duration).contains(&t) {
                            bail!("marginal time {t} outside [0, {}]", sampler.duration);
                        }
                    }
                    let head: Vec<String> = times.iter().map(|t| t.to_string()).collect();
                    writeln!(w, "rep,{}", head.join(","))?;
                    for (i, p) in paths.iter().enumerate() {
                        let row: Vec<String> = times.iter().map(|&t| fmt17(p.value_at(t))).collect();
                        writeln!(w, "{i},{}", row.join(","))?;
                    }
                }
                None => {
                    for (i, p) in paths.iter().enumerate() {
                        if i > 0 {
                            writeln!(w)?;
                        }
                        p.write_csv(&mut w)?;
                    }
                }
            }
            w.flush()?;
        }
        Command::Density { family, lambda, t, t0, x0, x, y, len, s, grid, xmax, out } => {
            let fam = match family {
                FamilyArg::Fz => Family::Z { lambda: need(lambda, "lambda")? },
                FamilyArg::Fa => Family::A { lambda: need(lambda, "lambda")? },
                FamilyArg::Fzhat => Family::Zhat { lambda: need(lambda, "lambda")? },
                FamilyArg::FzConditioned => Family::ZConditioned { lambda: need(lambda, "lambda")? },
                FamilyArg::Arcsine => Family::Arcsine,
                FamilyArg::Rayleigh => Family::Rayleigh,
                FamilyArg::Meander => Family::Meander { t: need(t, "t")? },
                FamilyArg::Excursion => Family::Excursion { t: need(t, "t")? },
                FamilyArg::Bes3Bridge => Family::Bes3Bridge {
                    x: need(x, "x")?,
                    y: need(y, "y")?,
                    len: need(len, "len")?,
                    s: need(s, "s")?,
                },
                FamilyArg::Nonmarkov1 => {
                    Family::NonMarkov1 { lambda: need(lambda, "lambda")?, t0: need(t0, "t0")?, x0: need(x0, "x0")? }
                }
                FamilyArg::Nonmarkov2 => {
                    Family::NonMarkov2 { lambda: need(lambda, "lambda")?, t0: need(t0, "t0")?, x0: need(x0, "x0")? }
                }
            };
            if grid < 2 {
                bail!("--grid must be at least 2");
            }
            let spec = DensitySpec::new(fam)?;
            let (lo, hi) = spec.support();
            let hi = if hi.is_finite() { hi } else { xmax };
            let xs: Vec<f64> = (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect();
            let cdf = spec.cdf_sorted(&xs)?;
            let mut w = output(&out)?;
            writeln!(w, "x,density,cdf")?;
            for (x, c) in xs.iter().zip(cdf) {
                writeln!(w, "{},{},{}", fmt17(*x), fmt17(spec.density(*x)), fmt17(c))?;
            }
            w.flush()?;
        }
        Command::Minorant { sampler, seed, input, aggregate, out } => {
            let paths = match &input {
                Some(p) => Path::read_csv_blocks(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?))?,
                None => sampler.run(seed.seed)?,
            };
            let hulls: Vec<_> = paths.iter().map(convex_minorant).collect();
            let v = if aggregate {
                let stats = segment_count_stats(hulls.iter().map(|h| h.n_segments()));
                let last: Vec<f64> = hulls.iter().map(|h| h.last_slope()).collect();
                json!({"schema": SCHEMA, "paths": hulls.len(), "segment_counts": stats, "last_slopes": last})
            } else {
                let list: Vec<Value> = hulls
                    .iter()
                    .map(|h| json!({"n_segments": h.n_segments(), "slopes": h.slopes, "vertices": h.vertices}))
                    .collect();
                json!({"schema": SCHEMA, "minorants": list})
            };
            write_json(&out, &v)?;
        }
        Command::Verify { experiment, seed, reps, grid, thresholds, timings, out } => {
            let ids: Vec<ExperimentId> = if experiment == "all" {
                ExperimentId::ALL.to_vec()
            } else {
                experiment.split(',').map(|s| s.trim().parse()).collect::<vervaat::Result<_>>()?
            };
            let thresholds = match thresholds {
                Some(p) => serde_json::from_reader(BufReader::new(File::open(&p).with_context(|| format!("opening {}", p.display()))?))?,
                None => Thresholds::default(),
            };
            let settings = RunSettings { seed: seed.seed, reps, grid, thresholds };
            let suite = run_suite(&ids, &settings)?;
            for e in &suite.experiments {
                eprintln!("{:<22} {}  ({:.1} s)", e.id, if e.pass { "pass" } else { "FAIL" }, e.wall_time_s);
                for t in e.tests.iter().filter(|t| !t.pass) {
                    eprintln!("    {}: {} vs {} ({})", t.name, t.statistic, t.threshold, t.derivation);
                }
            }
            let v = if timings {
                serde_json::to_value(&suite)?
            } else {
                serde_json::from_str(&suite.canonical_json())?
            };
            write_json(&out, &v)?;
            if !suite.pass {
                return Ok(Outcome::Failed);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
