//! Acceptance run: every criterion at full size with the default seed.
//!
//! Runs without the libtest harness so the report is never captured.
//! Prints one pass/fail line per criterion. The test fails on any failure
//! except the criteria listed in `KNOWN_RED`, which are printed as failures
//! but do not stop the run; if one of them starts passing the run says so.

use std::time::Instant;

use vervaat::verify::{run_experiment, ExperimentId, ExperimentReport, RunSettings, DEFAULT_SEED};

/// The drifting-excursion hitting time does not follow the stated law; see
/// the README section on known deviations.
const KNOWN_RED: &[u32] = &[8];

struct Line {
    number: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn summary(r: &ExperimentReport) -> String {
    let failed: Vec<String> = r
        .tests
        .iter()
        .filter(|t| !t.pass)
        .map(|t| format!("{} = {:.5} vs {:.5}", t.name, t.statistic, t.threshold))
        .collect();
    if failed.is_empty() {
        format!("{} subtests, {:.1} s", r.tests.len(), r.wall_time_s)
    } else {
        format!("{:.1} s; failed: {}", r.wall_time_s, failed.join("; "))
    }
}

fn criterion(settings: &RunSettings, number: u32, title: &'static str, id: ExperimentId, max_seconds: Option<f64>) -> Line {
    let r = run_experiment(id, settings).expect("experiment runs");
    let in_time = max_seconds.map_or(true, |s| r.wall_time_s < s);
    let mut detail = summary(&r);
    if !in_time {
        detail.push_str(&format!("; slower than {} s", max_seconds.unwrap()));
    }
    Line { number, title, pass: r.pass && in_time, detail }
}

fn determinism() -> Line {
    let settings = RunSettings { reps: Some(3000), ..RunSettings::default() };
    let ids = [ExperimentId::Samplers, ExperimentId::Decomposition, ExperimentId::AboveDrift];
    let run_with = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| ids.iter().map(|&id| run_experiment(id, &settings).unwrap().canonical_json()).collect())
    };
    let one = run_with(1);
    let three = run_with(3);
    let pass = one == three;
    Line {
        number: 12,
        title: "determinism across worker counts",
        pass,
        detail: format!("{} reports compared at 1 and 3 threads", ids.len()),
    }
}

fn main() {
    let start = Instant::now();
    let s = RunSettings::with_seed(DEFAULT_SEED);
    let mut lines = vec![
        criterion(&s, 1, "exact discrete suite", ExperimentId::Discrete, Some(60.0)),
        criterion(&s, 2, "decomposition of the Vervaat bridge", ExperimentId::Decomposition, Some(300.0)),
        criterion(&s, 3, "duality and last-hit law", ExperimentId::Duality, None),
        criterion(&s, 4, "Vervaat limit at lambda = 0", ExperimentId::VervaatLimit, None),
        criterion(&s, 5, "moments of V(B)", ExperimentId::MomentsVb, None),
        criterion(&s, 6, "meander moments", ExperimentId::MeanderMoments, None),
        criterion(&s, 7, "probability above the drift line", ExperimentId::AboveDrift, None),
        criterion(&s, 8, "drifting excursion hitting time", ExperimentId::DriftExcursion, None),
        criterion(&s, 9, "convex minorant", ExperimentId::Minorant, None),
        criterion(&s, 10, "non-Markov property", ExperimentId::NonMarkov, None),
        criterion(&s, 11, "local limit", ExperimentId::DiscreteToContinuum, None),
        determinism(),
    ];
    lines.sort_by_key(|l| l.number);
    let supporting = [
        criterion(&s, 0, "sampler checks", ExperimentId::Samplers, None),
        criterion(&s, 0, "cyclic shift of the Vervaat bridge", ExperimentId::BianeShift, None),
    ];

    let mut unexpected = Vec::new();
    for l in &lines {
        let known = KNOWN_RED.contains(&l.number);
        let tag = match (l.pass, known) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as known red; now passing)",
            (false, true) => "FAIL (known red)",
            (false, false) => "FAIL",
        };
        println!("criterion {:>2} {:<40} {}  [{}]", l.number, l.title, tag, l.detail);
        if !l.pass && !known {
            unexpected.push(l.number);
        }
    }
    for l in &supporting {
        println!("supporting   {:<40} {}  [{}]", l.title, if l.pass { "PASS" } else { "FAIL" }, l.detail);
        if !l.pass {
            unexpected.push(0);
        }
    }
    println!("acceptance run took {:.0} s", start.elapsed().as_secs_f64());
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}
