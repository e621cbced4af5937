use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sfgap::apps::{self, build_dsm, build_num, DsmInstance, GapReport, Utility};
use sfgap::gapbounds::bound_report;
use sfgap::hulls::{minimal_face, PointSet};
use sfgap::nonconvexity::{rho_k_grid, rho_k_hsigma, rho_k_min_box, rho_k_neglogmax, Certainty, RhoRow, RhoTable, RhoValue, SampledFunction};
use sfgap::sfdecomp::{decompose_epigraph, decompose_plain, decompose_refined, SFDecomposition};
use sfgap::{Error, Result};

use crate::config::RunConfig;

/// A command result in every output format.
pub struct Output {
    pub json: Value,
    pub csv: String,
    pub pretty: String,
    pub verdicts_hold: bool,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Deserialize)]
struct DecomposeInput {
    sets: Vec<PointSet>,
    z: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposeMode {
    Plain,
    Refined,
    Epigraph,
}

pub fn decompose(path: &Path, mode: DecomposeMode, cfg: &RunConfig) -> Result<Output> {
    let input: DecomposeInput = serde_json::from_str(&read(path)?).map_err(|e| Error::InvalidInput(e.to_string()))?;
    for s in &input.sets {
        s.validate()?;
    }
    let s = &cfg.settings;
    let (dec, face): (SFDecomposition, Option<Value>) = match mode {
        DecomposeMode::Plain => (decompose_plain(&input.sets, &input.z, s)?, None),
        DecomposeMode::Refined => {
            let face = minimal_face(&input.sets, &input.z, s)?;
            let dec = decompose_refined(&input.sets, &input.z, &face, s)?;
            (dec, Some(serde_json::to_value(&face).expect("face serializes")))
        }
        DecomposeMode::Epigraph => (decompose_epigraph(&input.sets, &input.z, s)?, None),
    };
    let rows = dec
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            vec![
                input.sets[i].label().to_string(),
                dec.cardinalities[i].to_string(),
                join(&b.support),
                join(&b.weights),
                join(&dec.points[i]),
            ]
        })
        .collect();
    let mut pretty = format!(
        "{:?} decomposition: sum k_i = {} (budget {}), residual {:e}\n",
        dec.kind, dec.total, dec.budget, dec.residual
    );
    for (i, b) in dec.blocks.iter().enumerate() {
        pretty.push_str(&format!(
            "  {}: k = {}, support [{}], weights [{}]\n",
            input.sets[i].label(),
            dec.cardinalities[i],
            join(&b.support),
            join(&b.weights)
        ));
    }
    Ok(Output {
        json: json!({ "decomposition": dec, "face": face }),
        csv: csv_text(&["set", "k", "support", "weights", "point"], rows),
        pretty,
        verdicts_hold: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    #[value(name = "min_box")]
    MinBox,
    Neglogmax,
    #[value(name = "h_sigma")]
    HSigma,
    Sampled,
}

pub struct RhoArgs<'a> {
    pub family: Family,
    pub n: Option<usize>,
    pub k_max: usize,
    pub sigma: Option<f64>,
    pub file: Option<&'a Path>,
}

pub fn rho(args: &RhoArgs<'_>, cfg: &RunConfig) -> Result<Output> {
    let need_n = || args.n.ok_or_else(|| Error::InvalidInput("--n is required for this family".into()));
    let (label, values, witnesses): (String, Vec<RhoValue>, Vec<Value>) = match args.family {
        Family::MinBox => {
            let n = need_n()?;
            (format!("min_box n={n}"), (1..=args.k_max).map(|k| rho_k_min_box(n, k)).collect::<Result<_>>()?, vec![])
        }
        Family::Neglogmax => {
            let n = need_n()?;
            (format!("neglogmax n={n}"), (1..=args.k_max).map(|k| rho_k_neglogmax(n, k)).collect::<Result<_>>()?, vec![])
        }
        Family::HSigma => {
            let sigma = args.sigma.ok_or_else(|| Error::InvalidInput("--sigma is required for h_sigma".into()))?;
            (format!("h_sigma sigma={sigma}"), (1..=args.k_max).map(|k| rho_k_hsigma(k, sigma)).collect::<Result<_>>()?, vec![])
        }
        Family::Sampled => {
            let path = args.file.ok_or_else(|| Error::InvalidInput("--file is required for sampled".into()))?;
            let f = SampledFunction::from_json(&read(path)?)?;
            let mut vals = Vec::new();
            let mut wits = Vec::new();
            for k in 1..=args.k_max {
                let est = rho_k_grid(&f, k, cfg.weight_steps, &cfg.settings)?;
                vals.push(RhoValue { value: est.value, flag: est.flag });
                wits.push(json!({ "k": k, "witness": est.witness }));
            }
            (format!("sampled {}", path.display()), vals, wits)
        }
    };
    let table = RhoTable::new(vec![RhoRow {
        label: label.clone(),
        values: values.iter().map(|v| v.value).collect(),
        flags: values.iter().map(|v| v.flag).collect(),
    }])?;
    let rows = values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![(i + 1).to_string(), v.value.to_string(), flag_name(v.flag).to_string()])
        .collect();
    let mut pretty = format!("{label}\n");
    for (i, v) in values.iter().enumerate() {
        pretty.push_str(&format!("  k = {}: {} ({})\n", i + 1, v.value, flag_name(v.flag)));
    }
    let mut out = json!({ "table": table });
    if !witnesses.is_empty() {
        out["witnesses"] = Value::Array(witnesses);
    }
    Ok(Output { json: out, csv: csv_text(&["k", "rho", "flag"], rows), pretty, verdicts_hold: true })
}

fn flag_name(c: Certainty) -> &'static str {
    match c {
        Certainty::Exact => "exact",
        Certainty::UpperBound => "upper_bound",
        Certainty::LowerBound => "lower_bound",
        Certainty::Indeterminate => "indeterminate",
    }
}

pub fn bound(path: &Path, m: usize) -> Result<Output> {
    let table = RhoTable::from_json(&read(path)?)?;
    let r = bound_report(&table, m)?;
    let pretty = format!(
        "B = {} ({}) at k* = [{}]\nudell = {} ({})\nclassic = {} ({})\nB <= udell <= classic: {}\n",
        r.b,
        flag_name(r.b_flag),
        join(&r.k_star),
        r.bound_udell,
        flag_name(r.udell_flag),
        r.bound_classic,
        flag_name(r.classic_flag),
        if r.ordering_holds { "holds" } else { "FAILS" }
    );
    let csv = csv_text(
        &["m", "B", "k_star", "udell", "classic", "ordering"],
        vec![vec![
            m.to_string(),
            r.b.to_string(),
            join(&r.k_star),
            r.bound_udell.to_string(),
            r.bound_classic.to_string(),
            r.ordering_holds.to_string(),
        ]],
    );
    Ok(Output { verdicts_hold: r.ordering_holds, json: serde_json::to_value(&r).expect("report serializes"), csv, pretty })
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow<'a> {
    tones: usize,
    report: &'a GapReport,
    b_times_n: f64,
}

const REPORT_HEADER: [&str; 12] =
    ["family", "tones", "step", "primal", "dual", "gap", "slack", "B", "udell", "classic", "B_times_N", "verdicts"];

fn report_row(r: &GapReport, tones: usize) -> Vec<String> {
    vec![
        format!("{:?}", r.family).to_lowercase(),
        tones.to_string(),
        r.grid.step.map_or(String::new(), |s| s.to_string()),
        r.primal.value.to_string(),
        r.dual.value.to_string(),
        r.gap.to_string(),
        r.slack.to_string(),
        r.bounds.b.to_string(),
        r.bounds.bound_udell.to_string(),
        r.bounds.bound_classic.to_string(),
        (r.bounds.b * tones as f64).to_string(),
        r.verdicts.all().to_string(),
    ]
}

fn report_pretty(r: &GapReport) -> String {
    format!(
        "{:?}: p = {} ({}), d = {} ({}), gap = {}\n  B = {}, udell = {}, classic = {}, closed form = {} (previous {})\n  verdict gap <= B + {:e}: {}; B <= udell <= classic: {}\n",
        r.family,
        r.primal.value,
        flag_name(r.primal.direction),
        r.dual.value,
        flag_name(r.dual.direction),
        r.gap,
        r.bounds.b,
        r.bounds.bound_udell,
        r.bounds.bound_classic,
        r.closed_form.refined,
        r.closed_form.previous,
        r.slack,
        if r.verdicts.gap_within_bound && r.verdicts.weak_duality { "holds" } else { "FAILS" },
        if r.verdicts.b_le_udell && r.verdicts.udell_le_classic { "holds" } else { "FAILS" },
    )
}

pub fn demo_num(links: usize, users: usize, paths: usize, utility: Utility, cfg: &RunConfig) -> Result<Output> {
    let inst = build_num(cfg.seed, links, users, paths, utility)?;
    let r = apps::num_gap_report(&inst, &cfg.settings)?;
    Ok(Output {
        verdicts_hold: r.verdicts.all(),
        csv: csv_text(&REPORT_HEADER, vec![report_row(&r, 0)]),
        pretty: report_pretty(&r),
        json: serde_json::to_value(&r).expect("report serializes"),
    })
}

pub struct DsmArgs<'a> {
    pub users: usize,
    pub tones: &'a [usize],
    pub sigma: f64,
    pub budget: f64,
    pub random: bool,
}

pub fn demo_dsm(args: &DsmArgs<'_>, cfg: &RunConfig) -> Result<Output> {
    let mut reports = Vec::new();
    for &n in args.tones {
        let inst = if args.random {
            build_dsm(cfg.seed, args.users, n)?
        } else {
            DsmInstance::uniform(args.users, n, args.sigma, args.budget)?
        };
        reports.push((n, apps::dsm_gap_report(&inst, cfg.grid_step, &cfg.settings)?));
    }
    let rows: Vec<SweepRow> = reports.iter().map(|(n, r)| SweepRow { tones: *n, report: r, b_times_n: r.bounds.b * *n as f64 }).collect();
    Ok(Output {
        verdicts_hold: reports.iter().all(|(_, r)| r.verdicts.all()),
        csv: csv_text(&REPORT_HEADER, reports.iter().map(|(n, r)| report_row(r, *n)).collect()),
        pretty: reports.iter().map(|(_, r)| report_pretty(r)).collect(),
        json: serde_json::to_value(&rows).expect("sweep serializes"),
    })
}
