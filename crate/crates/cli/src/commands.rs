use std::fmt::Write as _;

use vprofile::excursion::Sign;
use vprofile::genfun::{closed_form_series, f_table, float_fixed_point, joint_table, solve_nu_gf, solve_nu_minus_gf, Series};
use vprofile::kernel::{cond_transition_prob, simulate_chain, transition_prob, CondState, State};
use vprofile::maps::{ball_profile, map_to_tree, schaeffer_sample_sweep, schaeffer_sweep, tree_to_map, Quadrangulation};
use vprofile::num::fmt_rational;
use vprofile::oracle::{
    counting_lemma_formula, counting_lemma_sweep, decompose_sample_sweep, decompose_sweep, exact_chain_law, lukasiewicz_check,
    marked_forest_formula, marked_forest_sweep, remark_profile_check, verify_markov_exact, SweepReport,
};
use vprofile::sampler::{default_workers, run_indexed, QuadrangulationSampler, SamplerConfig, TreeSampler};
use vprofile::stats::{
    census_csv, chain_agreement, conditional_excursion_cells, conditional_excursion_test, forest_law_tests, history_dependence,
    kernel_row_tests, sample_ball_chains, sample_census, sample_first_hit_offspring, sample_forest_offspring, tests_csv, MultiTest,
};
use vprofile::{decompose, Builtin, Error, LabelledPlaneTree, Rational, Result, Scalar, TreeModel};

use crate::args::*;
use crate::{parse_model, Output};

pub(crate) fn dispatch(cmd: &Command) -> (&'static str, Result<Output>) {
    match cmd {
        Command::Sample(a) => ("sample", sample(a)),
        Command::Decompose(a) => ("decompose", decompose_cmd(a)),
        Command::Genfun(a) => ("genfun", genfun(a)),
        Command::Kernel(a) => ("kernel", kernel(a)),
        Command::Verify(a) => ("verify", verify(a)),
        Command::Maps(a) => ("maps", maps(a)),
        Command::Stats(a) => ("stats", stats(a)),
    }
}

fn config(run: &RunOpts) -> Result<SamplerConfig> {
    let cfg = SamplerConfig { seed: run.seed, vertex_cap: run.vertex_cap, rejection_cap: run.rejection_cap };
    cfg.validate()?;
    Ok(cfg)
}

fn workers(run: &RunOpts) -> usize {
    run.workers.unwrap_or_else(default_workers)
}

fn with_run(mut out: Output, model: Option<&str>, run: &RunOpts) -> Output {
    out.model = model.map(str::to_string);
    out.seed = Some(run.seed);
    out.caps = Some((run.vertex_cap, run.rejection_cap));
    out
}

fn required_model(model: &Option<String>, what: &str) -> Result<(String, TreeModel)> {
    let spec = model.as_ref().ok_or_else(|| Error::Config(format!("{what} needs --model builtin:<id> or file:<path>")))?;
    Ok((spec.clone(), parse_model(spec)?))
}

fn read_input(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn tree_summary(i: u64, t: &LabelledPlaneTree) -> String {
    format!("{i},{},{},{},{},{}", t.len(), t.edges(), t.root_label(), t.min_label(), t.max_label())
}

fn sample(a: &SampleArgs) -> Result<Output> {
    let cfg = config(&a.run)?;
    let w = workers(&a.run);
    let summary = a.format == SampleFormat::Summary;
    let mut text = String::new();
    if a.kind == SampleKind::Quadrangulation {
        let qs = QuadrangulationSampler::new();
        let lines = run_indexed(a.count, w, |i| -> Result<String> {
            let (t, b) = qs.tree(&cfg, &mut cfg.rng(i))?;
            if !summary {
                return Ok(format!("{},{b}", t.encode()));
            }
            let q = tree_to_map(&t, b)?;
            Ok(format!("{i},{},{},{},{b}", q.face_count(), q.vertex_count(), q.d_star()))
        });
        text.push_str(if summary { "index,faces,vertices,d_star,orientation\n" } else { "tree,orientation\n" });
        for l in lines {
            text.push_str(&l?);
            text.push('\n');
        }
        return Ok(with_run(Output::text(text), None, &a.run));
    }
    let (spec, model) = required_model(&a.model, "sample")?;
    let sampler = TreeSampler::new(&model)?;
    let sign = match a.sign {
        SignArg::Plus => Sign::Plus,
        SignArg::Minus => Sign::Minus,
    };
    if a.kind == SampleKind::Conditioned && a.edges.is_none() {
        return Err(Error::Config("--kind conditioned needs --edges".into()));
    }
    let lines = run_indexed(a.count, w, |i| -> Result<String> {
        let mut rng = cfg.rng(i);
        let (t, n) = match a.kind {
            SampleKind::Tree => (sampler.tree(a.root_label, &cfg, &mut rng)?, None),
            SampleKind::Excursion => {
                let e = sampler.excursion(sign, &cfg, &mut rng)?;
                (e.tree, Some(e.n))
            }
            _ => (sampler.conditioned(a.edges.unwrap_or(0), &cfg, &mut rng)?, None),
        };
        Ok(match (summary, n) {
            (false, _) => t.encode(),
            (true, Some(n)) => format!("{},{n}", tree_summary(i, &t)),
            (true, None) => tree_summary(i, &t),
        })
    });
    if summary {
        text.push_str("index,vertices,edges,root_label,min_label,max_label");
        text.push_str(if a.kind == SampleKind::Excursion { ",zero_leaves\n" } else { "\n" });
    }
    for l in lines {
        text.push_str(&l?);
        text.push('\n');
    }
    Ok(with_run(Output::text(text), Some(&spec), &a.run))
}

fn decompose_cmd(a: &DecomposeArgs) -> Result<Output> {
    let trees: Vec<String> = match (&a.tree, &a.input) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(p)) => read_input(p)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect(),
        (None, None) => return Err(Error::Config("decompose needs --tree or --input".into())),
    };
    let mut text = String::new();
    for (i, enc) in trees.iter().enumerate() {
        let t = LabelledPlaneTree::decode(enc)?;
        let d = decompose(&t, a.level)?;
        if i > 0 {
            text.push('\n');
        }
        let f = &d.forest;
        let _ = writeln!(text, "tree,{}", t.encode());
        let _ = writeln!(text, "root_component,{}", d.root_component.encode());
        let _ = writeln!(text, "forest_shape,{}", f.shape_string());
        text.push_str("vertex,parent,height,sign,attach,excursion\n");
        for v in 0..f.len() {
            let parent = f.parent[v].map(|p| p.to_string()).unwrap_or_default();
            let sign = if f.sign(v) == Sign::Plus { '+' } else { '-' };
            let _ = writeln!(text, "{v},{parent},{},{sign},{},{}", f.height[v], f.attach[v], f.decorations[v].tree.encode());
        }
    }
    Ok(Output::text(text))
}

fn rational_row(text: &mut String, prefix: &str, x: &Rational, float: bool) {
    let _ = if float {
        writeln!(text, "{prefix}{},{}", fmt_rational(x), x.to_f64())
    } else {
        writeln!(text, "{prefix}{}", fmt_rational(x))
    };
}

fn genfun(a: &GenfunArgs) -> Result<Output> {
    let model = parse_model(&a.model)?;
    let mut text = String::new();
    let float_col = if a.float { ",float" } else { "" };
    match a.table {
        GenfunTable::Nu | GenfunTable::NuMinus => {
            let s = if a.table == GenfunTable::Nu { solve_nu_gf(&model, a.order)? } else { solve_nu_minus_gf(&model, a.order)? };
            let _ = writeln!(text, "k,coefficient{float_col}");
            for (k, c) in s.coeffs().iter().enumerate() {
                rational_row(&mut text, &format!("{k},"), c, a.float);
            }
        }
        GenfunTable::F => {
            let nu = solve_nu_gf(&model, a.order)?;
            let f = f_table(&nu, a.p_max, a.order)?;
            let _ = writeln!(text, "p,q,value{float_col}");
            for p in 0..=a.p_max {
                for (q, c) in f.row(p).iter().enumerate() {
                    rational_row(&mut text, &format!("{p},{q},"), c, a.float);
                }
            }
        }
    }
    let mut out = Output::text(text);
    out.model = Some(a.model.clone());
    Ok(out)
}

fn parse_tuple(s: &str, len: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != len {
        return Err(Error::Config(format!("{s:?}: expected {len} comma-separated integers")));
    }
    parts
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| Error::Config(format!("{s:?}: {p:?} is not a nonnegative integer"))))
        .collect()
}

/// The kernels are those of the incomplete-binary model; there is no model choice here.
fn kernel(a: &KernelArgs) -> Result<Output> {
    let model = TreeModel::builtin(Builtin::IncompleteBinary);
    let mut text = String::new();
    if let Some(v_total) = a.total {
        let x = parse_tuple(&a.from, 3)?;
        let from = CondState::new(x[0], x[1], x[2], v_total)?;
        let ft = joint_table(&model, v_total + 2, v_total + 2, v_total + 1)?;
        text.push_str("r,s,w,exact,float\n");
        let w = from.v + from.p + from.q;
        let targets: Vec<CondState> = if from == CondState::absorbing(v_total) {
            vec![from]
        } else {
            (0..=a.smax.min(v_total + 1))
                .flat_map(|s| (0..=from.p + s).map(move |r| CondState { p: r, q: s, v: w }))
                .filter(|t| t.is_valid(v_total))
                .collect()
        };
        for to in targets {
            let x: Rational = cond_transition_prob(&ft, v_total, from, to)?;
            if x != Rational::from_integer(0.into()) {
                let _ = writeln!(text, "{},{},{},{},{}", to.p, to.q, to.v, fmt_rational(&x), x.to_f64());
            }
        }
        return Ok(Output::text(text));
    }
    let x = parse_tuple(&a.from, 2)?;
    let from = State::new(x[0], x[1])?;
    if let Some(steps) = a.simulate {
        let nu: Series<f64> = closed_form_series(Builtin::IncompleteBinary, 400)?;
        let path = simulate_chain(&nu, from, steps, &SamplerConfig::new(a.seed))?;
        text.push_str("m,p,q\n");
        for (m, s) in path.iter().enumerate() {
            let _ = writeln!(text, "{},{},{}", m + 1, s.p, s.q);
        }
        let mut out = Output::text(text);
        out.seed = Some(a.seed);
        return Ok(out);
    }
    let nu: Series<Rational> = closed_form_series(Builtin::IncompleteBinary, a.smax.max(from.q))?;
    let f = f_table(&nu, from.p + a.smax, a.smax.max(from.q))?;
    text.push_str("r,s,exact,float\n");
    if from == State::ABSORBING {
        text.push_str("0,0,1/1,1\n");
        return Ok(Output::text(text));
    }
    for s in 0..=a.smax {
        for r in 0..=from.p + s {
            let to = State { p: r, q: s };
            if !to.is_valid() {
                continue;
            }
            let x: Rational = transition_prob(&f, from, to)?;
            if x != Rational::from_integer(0.into()) {
                let _ = writeln!(text, "{r},{s},{},{}", fmt_rational(&x), x.to_f64());
            }
        }
    }
    Ok(Output::text(text))
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::CountingLemma => "counting-lemma",
        Suite::MarkedForests => "marked-forests",
        Suite::CycleLemma => "cycle-lemma",
        Suite::Markov => "markov",
        Suite::Decompose => "decompose",
        Suite::Schaeffer => "schaeffer",
        Suite::ProfileCount => "profile-count",
    }
}

fn csv_field(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn verify(a: &VerifyArgs) -> Result<Output> {
    let cfg = config(&a.run)?;
    let w = workers(&a.run);
    let ib_nu = |order: usize| -> Result<Vec<Rational>> { Ok(closed_form_series(Builtin::IncompleteBinary, order)?.into_coeffs()) };
    let mut model_spec = None;
    let report = match a.suite {
        Suite::CountingLemma => counting_lemma_sweep(a.max_pq, counting_lemma_formula)?,
        Suite::MarkedForests => marked_forest_sweep(&ib_nu(a.s_max)?, a.p_max, a.s_max, marked_forest_formula)?,
        Suite::CycleLemma => {
            let nu = ib_nu(a.s_max)?;
            let mut r = SweepReport::default();
            for p in 1..=a.p_max {
                for s in 0..=a.s_max {
                    let ok = lukasiewicz_check(&nu, p, s)?;
                    r.record(ok, || format!("p={p} s={s}"));
                }
            }
            r
        }
        Suite::Markov => {
            let mut r = SweepReport::default();
            for v in 0..=a.max_total {
                let m = verify_markov_exact(&exact_chain_law(v)?)?;
                r.checked += m.histories + m.transitions;
                r.failures += m.discrepancies.len();
                if r.first_failure.is_none() {
                    r.first_failure = m.discrepancies.first().map(|d| format!("V={v}: {d:?}"));
                }
            }
            r
        }
        Suite::Decompose => {
            let (spec, model) = required_model(&a.model, "the decompose suite")?;
            model_spec = Some(spec);
            let mut r = decompose_sweep(&model, a.max_edges)?;
            if a.samples > 0 {
                r = r.merge(decompose_sample_sweep(&model, a.samples, &cfg, w)?);
            }
            r
        }
        Suite::Schaeffer => {
            let mut r = schaeffer_sweep(a.max_edges)?;
            if a.samples > 0 {
                r = r.merge(schaeffer_sample_sweep(a.samples, &cfg, w)?);
            }
            r
        }
        Suite::ProfileCount => remark_profile_check(a.max_edges)?,
    };
    let text = format!(
        "suite,status,checked,failures,skipped,first_failure\n{},{},{},{},{},{}\n",
        suite_name(a.suite),
        if report.ok() { "pass" } else { "fail" },
        report.checked,
        report.failures,
        report.skipped,
        report.first_failure.as_deref().map(csv_field).unwrap_or_default()
    );
    let mut out = with_run(Output::text(text), model_spec.as_deref(), &a.run);
    out.passed = report.ok();
    Ok(out)
}

fn maps(a: &MapsArgs) -> Result<Output> {
    let load = || -> Result<Quadrangulation> {
        let path = a.input.as_ref().ok_or_else(|| Error::Config("this action needs --input <map.csv>".into()))?;
        Quadrangulation::from_csv(&read_input(path)?)
    };
    let text = match a.action {
        MapsAction::Sample => {
            let cfg = config(&a.run)?;
            let q = QuadrangulationSampler::new().sample(&cfg, &mut cfg.rng(0))?;
            return Ok(with_run(Output::text(q.to_csv()), None, &a.run));
        }
        MapsAction::Convert => {
            let enc = a.tree.as_ref().ok_or_else(|| Error::Config("convert needs --tree".into()))?;
            tree_to_map(&LabelledPlaneTree::decode(enc)?, a.orientation)?.to_csv()
        }
        MapsAction::ToTree => {
            let (t, b) = map_to_tree(&load()?)?;
            format!("tree,orientation\n{},{b}\n", t.encode())
        }
        MapsAction::Profile => {
            let s = ball_profile(&load()?);
            let mut text = String::from("k,perimeter,components,d_star\n");
            for k in 1..=s.eccentricity() {
                let _ = writeln!(text, "{k},{},{},{}", s.p(k as i64), s.c(k as i64), s.d_star);
            }
            text
        }
    };
    Ok(Output::text(text))
}

fn nu_float(model: &TreeModel, order: usize) -> Result<Series<f64>> {
    match model.builtin {
        Some(b) => closed_form_series(b, order),
        None => float_fixed_point(model, order),
    }
}

fn stats(a: &StatsArgs) -> Result<Output> {
    let model = parse_model(&a.model)?;
    let cfg = config(&a.run)?;
    let w = workers(&a.run);
    let mut passed = true;
    let text = match a.test {
        StatsTest::Census => census_csv(&sample_census(&model, a.count, &cfg, w)?.census),
        StatsTest::Kernel | StatsTest::Lower => {
            if model.builtin != Some(Builtin::IncompleteBinary) {
                return Err(Error::Unsupported("the explicit kernel is known for builtin:incomplete-binary only".into()));
            }
            let mc = sample_census(&model, a.count, &cfg, w)?;
            let census = if a.test == StatsTest::Kernel { &mc.census } else { &mc.lower };
            let t = kernel_row_tests(census, &nu_float(&model, 200)?, a.min_visits)?;
            passed = t.tests.iter().all(|(_, x)| x.passes(1e-3));
            tests_csv(&t)
        }
        StatsTest::FirstHits => {
            let nu_minus = nu_float(&model.mirrored(), 200)?;
            let off = sample_first_hit_offspring(&model, a.count, &cfg, w)?;
            let t = forest_law_tests(&off, nu_minus.coeffs(), nu_minus.coeffs(), a.min_visits as usize)?;
            passed = t.passes(1e-3);
            tests_csv(&t)
        }
        StatsTest::Excursions => {
            let pq = parse_tuple(&a.pq, 2)?;
            let cells = conditional_excursion_cells(&model, pq[0], pq[1], a.max_edges)?;
            let (t, hits) = conditional_excursion_test(&model, a.level, (pq[0], pq[1]), &cells, a.count, &cfg, w)?;
            passed = t.passes(1e-3);
            let name = format!("level {} (p,q)=({},{}) on {hits} trees", a.level, pq[0], pq[1]);
            tests_csv(&MultiTest::from_tests(vec![(name, t)]))
        }
        StatsTest::Balls => {
            if model.builtin != Some(Builtin::GeomPm01) {
                return Err(Error::Unsupported("quadrangulations come from builtin:geom-pm01 trees".into()));
            }
            let bc = sample_ball_chains(a.count, &cfg, w)?;
            let t = chain_agreement(&bc.upper, &bc.lower, a.min_visits)?;
            passed = t.passes(1e-3);
            tests_csv(&t)
        }
        StatsTest::History => {
            let mc = sample_census(&model, a.count, &cfg, w)?;
            let t = history_dependence(&mc.history, a.min_visits)?;
            passed = t.passes(1e-3);
            tests_csv(&t)
        }
        StatsTest::Forest => {
            if a.level == 0 {
                return Err(Error::Domain("level must be nonzero".into()));
            }
            let plus = nu_float(&model, 200)?;
            let minus = nu_float(&model.mirrored(), 200)?;
            let (root, other) = if a.level > 0 { (&plus, &minus) } else { (&minus, &plus) };
            let off = sample_forest_offspring(&model, a.level, a.count, &cfg, w)?;
            let t = forest_law_tests(&off, root.coeffs(), other.coeffs(), a.min_visits as usize)?;
            passed = t.passes(1e-3);
            tests_csv(&t)
        }
    };
    let mut out = with_run(Output::text(text), Some(&a.model), &a.run);
    out.passed = passed;
    Ok(out)
}
