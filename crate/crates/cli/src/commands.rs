use std::fmt::Write as _;

use anyhow::{anyhow, Context};
use serde::Serialize;

use curved_born::experiment::{run_suite, ExperimentConfig, Instance, Suite, SuiteReport};
use curved_born::protocol::{convergence_sweep, curved_born, patch_bounds, tight_bounds, DetectionRun, TrailStep};
use curved_born::{OutcomePattern, SliceDecomposition};

use crate::output::{prob, sites, Output, Table};

#[derive(Serialize)]
struct Envelope<'a, T> {
    command: &'static str,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    body: T,
}

fn envelope<T: Serialize>(command: &'static str, cfg: &ExperimentConfig, body: T, text: String) -> anyhow::Result<Output> {
    Output::new("result.json", &Envelope { command, config: cfg, body }, text)
}

fn instance(cfg: &ExperimentConfig) -> anyhow::Result<Instance> {
    Ok(cfg.instance()?)
}

#[derive(Serialize)]
struct Labeled {
    label: String,
    p: f64,
}

pub fn geometry(cfg: &ExperimentConfig) -> anyhow::Result<Output> {
    let inst = instance(cfg)?;
    let mut decs: Vec<SliceDecomposition> = Vec::new();
    let mut text = String::new();
    for &m in &inst.ms {
        let dec = inst.run(m)?.dec;
        let _ = writeln!(text, "m = {m}  kappa = {}  K = {}  S = {}", dec.kappa, dec.big_k, sites(dec.s));
        let mut t = Table::new(&["k", "layer", "A", "B", "C", "R"]);
        for r in &dec.rounds {
            t.row(vec![r.k.to_string(), r.layer.to_string(), sites(r.a), sites(r.b), sites(r.c), sites(r.r)]);
        }
        text.push_str(&t.render());
        let mut t = Table::new(&["k", "patch", "B_kl", "C_kl", "C_check", "C_hat", "D"]);
        for r in dec.rounds.iter().filter(|r| r.k >= dec.kappa) {
            for (l, p) in r.patches.iter().enumerate() {
                t.row(vec![
                    r.k.to_string(),
                    (l + 1).to_string(),
                    sites(p.b),
                    sites(p.c),
                    sites(p.c_check),
                    sites(p.c_hat),
                    sites(p.d),
                ]);
            }
        }
        text.push_str(&t.render());
        text.push('\n');
        decs.push(dec);
    }
    #[derive(Serialize)]
    struct Body {
        decompositions: Vec<SliceDecomposition>,
    }
    envelope("geometry", cfg, Body { decompositions: decs }, text)
}

#[derive(Serialize)]
struct RunBody {
    m: i64,
    kappa: i64,
    #[serde(rename = "K")]
    big_k: i64,
    branches: usize,
    outcomes: Vec<Labeled>,
    patterns: Vec<Labeled>,
    /// Only with the exploratory `skip_vacuum_reset` option: largest change
    /// of `P_det(L)` against the protocol with vacuum replacement.
    #[serde(skip_serializing_if = "Option::is_none")]
    double_detection_discrepancy: Option<f64>,
}

fn patterns(r: usize, probs: &[f64]) -> Vec<Labeled> {
    OutcomePattern::all(r).map(|pat| Labeled { label: pat.label(), p: probs[pat.bits as usize] }).collect()
}

fn outcome_text(text: &mut String, outcomes: &[Labeled], pats: &[Labeled]) {
    let mut t = Table::new(&["L", "P_det(L)"]);
    for l in pats {
        t.row(vec![l.label.clone(), prob(l.p)]);
    }
    text.push_str(&t.render());
    let mut t = Table::new(&["s", "P(s)"]);
    for o in outcomes {
        t.row(vec![o.label.clone(), prob(o.p)]);
    }
    text.push_str(&t.render());
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Output> {
    let inst = instance(cfg)?;
    let mut body = Vec::new();
    let mut text = String::new();
    for &m in &inst.ms {
        let run = inst.run(m)?;
        let res = run.run_sequential()?;
        let discrepancy = if inst.options.skip_vacuum_reset {
            let reference = DetectionRun::new(run.dynamics, run.psi0.clone(), run.dec.clone())?.run_sequential()?;
            Some(res.by_pattern.iter().zip(&reference.by_pattern).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        } else {
            None
        };
        let outcomes: Vec<Labeled> =
            res.table.support().into_iter().map(|(s, p)| Labeled { label: s.label(), p }).collect();
        let pats = patterns(run.dec.r(), &res.by_pattern);
        let _ = writeln!(
            text,
            "m = {m}  kappa = {}  K = {}  branches = {}",
            run.dec.kappa, run.dec.big_k, res.branches
        );
        if let Some(d) = discrepancy {
            let _ = writeln!(text, "exploratory: vacuum replacement skipped; max |change of P_det(L)| = {d:.3e}");
        }
        outcome_text(&mut text, &outcomes, &pats);
        text.push('\n');
        body.push(RunBody {
            m,
            kappa: run.dec.kappa,
            big_k: run.dec.big_k,
            branches: res.branches,
            outcomes,
            patterns: pats,
            double_detection_discrepancy: discrepancy,
        });
    }
    #[derive(Serialize)]
    struct Body {
        runs: Vec<RunBody>,
    }
    envelope("run", cfg, Body { runs: body }, text)
}

pub fn closed(cfg: &ExperimentConfig) -> anyhow::Result<Output> {
    let inst = instance(cfg)?;
    #[derive(Serialize)]
    struct Entry {
        m: i64,
        outcomes: Vec<Labeled>,
        patterns: Vec<Labeled>,
    }
    let mut body = Vec::new();
    let mut text = String::new();
    for &m in &inst.ms {
        let run = inst.run(m)?;
        let table = run.closed_expression()?;
        let outcomes: Vec<Labeled> =
            table.support().into_iter().map(|(s, p)| Labeled { label: s.label(), p }).collect();
        let pats = patterns(run.dec.r(), &table.coarse_grain());
        let _ = writeln!(text, "m = {m}  kappa = {}  K = {}", run.dec.kappa, run.dec.big_k);
        outcome_text(&mut text, &outcomes, &pats);
        text.push('\n');
        body.push(Entry { m, outcomes, patterns: pats });
    }
    #[derive(Serialize)]
    struct Body {
        closed: Vec<Entry>,
    }
    envelope("closed", cfg, Body { closed: body }, text)
}

pub fn born(cfg: &ExperimentConfig) -> anyhow::Result<Output> {
    let inst = instance(cfg)?;
    let dist = inst.distribution()?;
    let pats = patterns(inst.partition.r(), &curved_born(&dist, &inst.partition));
    let mut t = Table::new(&["L", "born"]);
    for l in &pats {
        t.row(vec![l.label.clone(), prob(l.p)]);
    }
    #[derive(Serialize)]
    struct Body {
        born: Vec<Labeled>,
    }
    envelope("born", cfg, Body { born: pats }, t.render())
}

#[derive(Serialize)]
struct BoundRow {
    label: String,
    lower: f64,
    upper: f64,
    patch_lower: f64,
    patch_upper: f64,
}

pub fn bounds(cfg: &ExperimentConfig) -> anyhow::Result<Output> {
    let inst = instance(cfg)?;
    let dist = inst.distribution()?;
    #[derive(Serialize)]
    struct Entry {
        m: i64,
        bounds: Vec<BoundRow>,
    }
    let mut body = Vec::new();
    let mut text = String::new();
    for &m in &inst.ms {
        let dec = inst.run(m)?.dec;
        let tight = tight_bounds(&dist, &dec);
        let patch = patch_bounds(&dist, &inst.partition, m);
        let rows: Vec<BoundRow> = OutcomePattern::all(dec.r())
            .map(|pat| {
                let i = pat.bits as usize;
                BoundRow {
                    label: pat.label(),
                    lower: tight[i].lower,
                    upper: tight[i].upper,
                    patch_lower: patch[i].lower,
                    patch_upper: patch[i].upper,
                }
            })
            .collect();
        let _ = writeln!(text, "m = {m}");
        let mut t = Table::new(&["L", "lower", "upper", "patch_lower", "patch_upper"]);
        for r in &rows {
            t.row(vec![r.label.clone(), prob(r.lower), prob(r.upper), prob(r.patch_lower), prob(r.patch_upper)]);
        }
        text.push_str(&t.render());
        text.push('\n');
        body.push(Entry { m, bounds: rows });
    }
    #[derive(Serialize)]
    struct Body {
        bounds: Vec<Entry>,
    }
    envelope("bounds", cfg, Body { bounds: body }, text)
}

pub const SWEEP_HEADER: &str = "m,L,lower,seq,upper,born,patch_lower,patch_upper";

pub fn sweep(cfg: &ExperimentConfig) -> anyhow::Result<Output> {
    let inst = instance(cfg)?;
    let mut ms = inst.ms.clone();
    ms.sort_unstable_by(|a, b| b.cmp(a));
    ms.dedup();
    let rows = convergence_sweep(&inst.dynamics, &inst.psi0, &inst.sigma, &inst.partition, &ms)?;
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    let mut t = Table::new(&["m", "L", "lower", "seq", "upper", "born", "width"]);
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.m,
            r.pattern.label(),
            r.lower,
            r.sequential,
            r.upper,
            r.born,
            r.patch_lower,
            r.patch_upper
        );
        t.row(vec![
            r.m.to_string(),
            r.pattern.label(),
            prob(r.lower),
            prob(r.sequential),
            prob(r.upper),
            prob(r.born),
            format!("{:.3e}", r.upper - r.lower),
        ]);
    }
    #[derive(Serialize)]
    struct Body<'a> {
        sweep: &'a [curved_born::protocol::SweepRow],
    }
    let mut out = envelope("sweep", cfg, Body { sweep: &rows }, t.render())?;
    out.csv = Some(csv);
    Ok(out)
}

pub fn trail(cfg: &ExperimentConfig, branch: Option<&str>) -> anyhow::Result<Output> {
    let inst = instance(cfg)?;
    #[derive(Serialize)]
    struct Entry {
        m: i64,
        branch: String,
        probability: f64,
        steps: Vec<TrailStep>,
    }
    let mut body = Vec::new();
    let mut text = String::new();
    for &m in &inst.ms {
        let run = inst.run(m)?;
        let support = run.run_sequential()?.table.support();
        let (s, p) = match branch {
            Some(label) => support
                .iter()
                .find(|(s, _)| s.label() == label)
                .copied()
                .ok_or_else(|| anyhow!("m = {m}: branch {label:?} does not occur (zero probability or wrong shape)"))?,
            None => support
                .iter()
                .copied()
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.bits.cmp(&a.0.bits)))
                .context("no branch has positive probability")?,
        };
        let steps = run.auxiliary_trail(s)?;
        let _ = writeln!(text, "m = {m}  branch = {}  P = {}", s.label(), prob(p));
        let mut t = Table::new(&["k", "N_k", "N_A", "prop1", "prop2", "prop3", "prop4"]);
        for st in &steps {
            t.row(vec![
                st.k.to_string(),
                prob(st.norm_sequential),
                prob(st.norm_auxiliary),
                format!("{:.2e}", st.property1),
                st.property2.map_or("-".into(), |v| format!("{v:.2e}")),
                format!("{:.2e}", st.property3),
                format!("{:.2e}", st.property4),
            ]);
        }
        text.push_str(&t.render());
        text.push('\n');
        body.push(Entry { m, branch: s.label(), probability: p, steps });
    }
    #[derive(Serialize)]
    struct Body {
        trails: Vec<Entry>,
    }
    envelope("trail", cfg, Body { trails: body }, text)
}

pub fn suite(cfg: &ExperimentConfig, suite: Suite) -> anyhow::Result<Output> {
    let inst = instance(cfg)?;
    let report: SuiteReport = run_suite(&inst, suite)?;
    let mut names: Vec<&str> = Vec::new();
    for c in &report.checks {
        if !names.contains(&c.name.as_str()) {
            names.push(&c.name);
        }
    }
    let mut t = Table::new(&["check", "count", "failed", "worst", "tolerance"]);
    for name in names {
        let group: Vec<_> = report.checks.iter().filter(|c| c.name == name).collect();
        let worst = group.iter().copied().reduce(|w, c| if c.worse_than(w) { c } else { w }).expect("nonempty group");
        t.row(vec![
            name.to_string(),
            group.len().to_string(),
            group.iter().filter(|c| !c.passed).count().to_string(),
            format!("{:.3e}", worst.residual),
            format!("{:.0e}", group[0].tolerance),
        ]);
    }
    let mut text = t.render();
    let _ = writeln!(text, "{}: {} checks, {} failed", if report.passed { "PASS" } else { "FAIL" }, report.checks.len(), report.failed);
    let mut out = Output::new("report.json", &report, text)?;
    out.failed = !report.passed;
    Ok(out)
}
