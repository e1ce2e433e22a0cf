//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
//! if any fails.

use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resonant_nf::builders::{
    build_example_dim6, build_example_nls, default_potential, dim6_model, intro4_model, random_field, RandomFieldSpec,
};
use resonant_nf::diophantine::{diophantine_audit, separation_bound_check};
use resonant_nf::field::{bracket, scaling_degree};
use resonant_nf::index::{
    nhat, rearrangement_gap, sample_conserving_pair, weight_c, ModeKey, MultiIndex, TruncationContext,
};
use resonant_nf::normalform::{
    a_inv_b, decompose, elimination_oracle, normalize, solve_linear_homological, KamConfig, TransformLog,
};
use resonant_nf::resonance::{enumerate_resonance, Ideal, ResonanceModule};
use resonant_nf::text::{field_from_text, field_to_text};
use resonant_nf::verify::{conjugacy_scaling, unit_direction, zeroed_modes, FlowConfig, SigmaSpec};
use resonant_nf::{GaussRational, VectorField};

type Field = VectorField<GaussRational>;

fn sqrt23() -> (f64, f64) {
    (2f64.sqrt(), 3f64.sqrt())
}

fn x(i: u32) -> ModeKey {
    ModeKey::index(i)
}

fn pair(a: u32, b: u32) -> MultiIndex {
    MultiIndex::from_pairs([(x(a), 1), (x(b), 1)])
}

fn dim6_module(d: u32) -> ResonanceModule {
    let (z1, z2) = sqrt23();
    enumerate_resonance(&TruncationContext::finite(6, d), &dim6_model(z1, z2).unwrap()).unwrap()
}

fn criterion_1() -> (bool, String) {
    let t = Instant::now();
    let m6 = dim6_module(6);
    let gens_ok = m6.q_generators == vec![pair(3, 4), pair(5, 6)];
    let p: Vec<String> = m6.p_generators.iter().flat_map(|(k, v)| v.iter().map(move |p| format!("{k}->{p}"))).collect();
    let p_ok = p == vec!["1->1:-1 2:2".to_string()];
    let m4 = enumerate_resonance(&TruncationContext::finite(4, 6), &intro4_model(2f64.sqrt()).unwrap()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = gens_ok && p_ok && m6.m_star_minimal == 4 && m4.m_star_minimal == 5 && secs < 1.0;
    let detail = format!(
        "dim6 gens ok {gens_ok}, translates {p:?}, M* {}; intro4 M* {} (expected 5, bound {}); {secs:.2}s",
        m6.m_star_minimal, m4.m_star_minimal, m4.m_star_bound
    );
    (ok, detail)
}

fn criterion_2() -> (bool, String) {
    let t = Instant::now();
    let mut ok = true;
    let mut stars = Vec::new();
    for p in [1u32, 2] {
        for n in 1..=4u32 {
            let (w, model) = build_example_nls(p, &default_potential(n), n, 2 * p + 1).unwrap();
            let ctx = *w.ctx();
            let m = enumerate_resonance(&ctx, &model).unwrap();
            let mut want: Vec<MultiIndex> = (-(n as i32)..=n as i32)
                .map(|j| MultiIndex::from_pairs([(ModeKey::lattice(j, 1), 1), (ModeKey::lattice(j, -1), 1)]))
                .collect();
            want.sort();
            let mut got = m.q_generators.clone();
            got.sort();
            let momentum = w.terms().all(|((k, q), _)| ctx.conserves(q, *k));
            ok &= got == want && m.delta_equals_m && m.m == 2 && momentum && m.m_star_minimal == 4;
            stars.push(format!("p{p}N{n}:{}/{}", m.m_star_minimal, m.m_star_bound));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    (ok, format!("minimal/bound M* per case [{}] (expected minimal 4); {secs:.2}s", stars.join(" ")))
}

fn criterion_3() -> (bool, String) {
    let (z1, z2) = sqrt23();
    let model = dim6_model(z1, z2).unwrap();
    let mut solved = 0;
    for seed in 1..=100u64 {
        let d = 2 + (seed % 5) as u32;
        let ctx = TruncationContext::finite(6, d);
        let lin = VectorField::linear(ctx, &model.linear_terms(&ctx).unwrap()).unwrap();
        let spec = RandomFieldSpec { terms: 8, min_order: 1, max_order: d, max_num: 9, max_den: 5 };
        let y = random_field(&ctx, seed, &spec, |k, q| !model.is_resonant(q, k)).unwrap();
        let f = solve_linear_homological(&y, &model).unwrap();
        if !y.is_zero() && bracket(&lin, &f).unwrap() == y {
            solved += 1;
        }
    }
    let module = dim6_module(6);
    let mut nilpotent = 0;
    let mut z_terms = 0;
    for seed in 1..=100u64 {
        let (w, _) = build_example_dim6(z1, z2, seed, 6).unwrap();
        let z = decompose(&w, &model, &module, module.m_star_minimal).unwrap().z;
        z_terms += usize::from(!z.is_zero());
        let ideal = if seed % 2 == 0 { Ideal::J0 } else { Ideal::J1 };
        let spec = RandomFieldSpec { terms: 6, min_order: 4, max_order: 6, max_num: 9, max_den: 5 };
        let y = random_field(w.ctx(), seed + 1000, &spec, |_, q| module.classify(q) == ideal).unwrap();
        let once = a_inv_b(&y, &z, (seed % 2 == 1) as u8, &model, &module).unwrap();
        if !y.is_zero() && a_inv_b(&once, &z, (seed % 2 == 1) as u8, &model, &module).unwrap().is_zero() {
            nilpotent += 1;
        }
    }
    let ok = solved == 100 && nilpotent == 100 && z_terms == 100;
    (ok, format!("inverse exact {solved}/100, nilpotent {nilpotent}/100 (Z nonzero in {z_terms})"))
}

fn sigma_restriction(f: &Field, zeroed: &[ModeKey]) -> Field {
    f.project_set(|_, q| q.modes().all(|m| !zeroed.contains(&m)))
}

fn criterion_4() -> (bool, String) {
    let (z1, z2) = sqrt23();
    let module = dim6_module(8);
    let zeroed = zeroed_modes(&SigmaSpec::from_module(&module));
    let mut good = 0;
    let mut max_steps = 0;
    let mut notes = Vec::new();
    for seed in 1..=20u64 {
        let (w, model) = build_example_dim6(z1, z2, seed, 8).unwrap();
        let res = normalize(&w, &model, &module, &KamConfig::default()).unwrap();
        let m_star = res.field.m_star;
        let total = res.field.total().unwrap();
        let oracle = elimination_oracle(&w, &model, &module, m_star).unwrap();
        let low = |f: &Field| f.project_set(|_, q| scaling_degree(q) >= m_star && module.classify(q) != Ideal::J2);
        let steps = res.kam_steps();
        max_steps = max_steps.max(steps);
        let checks = [
            steps <= 3,
            res.field.x.is_zero(),
            low(&total).is_zero(),
            res.trace.records.iter().all(|r| r.doubling_ok),
            low(&oracle).is_zero(),
            sigma_restriction(&total, &zeroed) == sigma_restriction(&oracle, &zeroed),
        ];
        if checks.iter().all(|&c| c) {
            good += 1;
        } else {
            notes.push(format!("seed {seed}: {checks:?}"));
        }
    }
    (good == 20, format!("{good}/20 instances, at most {max_steps} steps {}", notes.join("; ")))
}

fn criterion_5() -> (bool, String) {
    let t = Instant::now();
    let (z1, z2) = sqrt23();
    let d = 6;
    let rhos = [0.05, 0.025, 0.0125];
    let cfg = FlowConfig { steps: 200, horizon: 1.0, ..FlowConfig::default() };
    let mut ok = true;
    let mut rows = Vec::new();
    for seed in 1..=4u64 {
        let (w, model) = build_example_dim6(z1, z2, seed, d).unwrap();
        let module = enumerate_resonance(w.ctx(), &model).unwrap();
        let res = normalize(&w, &model, &module, &KamConfig::default()).unwrap();
        let m_star = res.field.m_star as f64;
        let sigma = SigmaSpec::from_module(&module);
        let on = unit_direction(w.ctx(), seed, Some(&sigma));
        let off = unit_direction(w.ctx(), seed, None);
        let s_on = conjugacy_scaling("on", &w, &res.log, &model, &on, &rhos, &cfg).unwrap().slope;
        let s_off = conjugacy_scaling("off", &w, &res.log, &model, &off, &rhos, &cfg).unwrap().slope;
        ok &= s_on >= d as f64 + 0.5 && s_off <= m_star + 1.5;
        rows.push(format!("seed {seed}: on {s_on:.2}, off {s_off:.2}"));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    (ok, format!("D = {d}, need on >= {}, off <= M*+1.5; {}; {secs:.2}s", d as f64 + 0.5, rows.join("; ")))
}

fn criterion_6() -> (bool, String) {
    let ctx = TruncationContext::finite(3, 5);
    let field = |seed: u64, lo: u32| {
        let spec = RandomFieldSpec { terms: 5, min_order: lo, max_order: 5, max_num: 4, max_den: 3 };
        random_field(&ctx, seed, &spec, |_, _| true).unwrap()
    };
    let mut lie_ok = 0;
    for s in 0..100u64 {
        let (a, b, c) = (field(3 * s + 1, 0), field(3 * s + 2, 0), field(3 * s + 3, 1));
        let anti = bracket(&a, &b).unwrap() == bracket(&b, &a).unwrap().neg();
        let j = bracket(&a, &bracket(&b, &c).unwrap())
            .unwrap()
            .add(&bracket(&b, &bracket(&c, &a).unwrap()).unwrap())
            .unwrap()
            .add(&bracket(&c, &bracket(&a, &b).unwrap()).unwrap())
            .unwrap();
        lie_ok += usize::from(anti && j.is_zero());
    }
    let module = dim6_module(6);
    let ctx6 = TruncationContext::finite(6, 6);
    let ideal_field = |seed: u64, ideal: Option<Ideal>| {
        let spec = RandomFieldSpec { terms: 4, min_order: 1, max_order: 6, max_num: 3, max_den: 3 };
        random_field(&ctx6, seed, &spec, |_, q| ideal.map_or(true, |i| module.classify(q) == i)).unwrap()
    };
    let mut closure_ok = 0;
    for s in 0..100u64 {
        let (a, b) = (ideal_field(2 * s + 1, Some(Ideal::J1)), ideal_field(2 * s + 2, Some(Ideal::J1)));
        let n = ideal_field(s + 500, Some(Ideal::J2));
        let any = ideal_field(s + 900, None);
        let b11 = module.project_ideal(&bracket(&a, &b).unwrap(), Ideal::J0).is_zero();
        let b12 = bracket(&a, &n).unwrap();
        let b12 = module.project_ideal(&b12, Ideal::J2) == b12;
        let bx2 = module.project_ideal(&bracket(&any, &n).unwrap(), Ideal::J0).is_zero();
        closure_ok += usize::from(b11 && b12 && bx2 && !n.is_zero());
    }
    (lie_ok == 100 && closure_ok == 100, format!("Lie identities {lie_ok}/100, closure laws {closure_ok}/100"))
}

fn criterion_7() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let pairs: Vec<_> = (0..10_000).map(|_| sample_conserving_pair(&mut rng, 20, 8)).collect();
    let mut bad = 0usize;
    let mut min_gap = f64::INFINITY;
    for (q, k) in &pairs {
        let n = nhat(&q.add_unit(*k)).unwrap();
        if n[0] > n[1..].iter().sum::<u32>() {
            bad += 1;
        }
        for theta in [0.25, 0.5, 0.75] {
            let g = rearrangement_gap(q, *k, theta).unwrap();
            min_gap = min_gap.min(g);
            if g < -1e-12 {
                bad += 1;
            }
            let c0 = weight_c(q, *k, 0.5, 1.0, theta).unwrap();
            let c1 = weight_c(q, *k, 0.5, 1.2, theta).unwrap();
            if c1 > c0 * (1.0 + 1e-12) {
                bad += 1;
            }
        }
    }
    let (z1, z2) = sqrt23();
    let (hits, viol) = separation_bound_check(&dim6_model(z1, z2).unwrap(), &TruncationContext::finite(6, 6), 6);
    let ok = bad == 0 && hits > 0 && viol == 0;
    (ok, format!("{bad} violations on 10^4 pairs (min gap {min_gap:+.1e}); separation {hits} premise hits, {viol} violations"))
}

fn criterion_8() -> (bool, String) {
    let (z1, z2) = sqrt23();
    let model = dim6_model(z1, z2).unwrap();
    let ctx = TruncationContext::finite(6, 6);
    let module = enumerate_resonance(&ctx, &model).unwrap();
    let fast = diophantine_audit(&model, &ctx, 2.0, 6, &module, true).unwrap();
    let brute = diophantine_audit(&model, &ctx, 2.0, 6, &module, false).unwrap();
    let same = matches!((fast.gamma_max, brute.gamma_max), (Some(a), Some(b)) if a.to_bits() == b.to_bits());
    let ok = same
        && brute.excluded_resonant > 0
        && brute.classification_mismatches == 0
        && fast.classification_mismatches == 0
        && fast.enumerated_count == brute.enumerated_count;
    (
        ok,
        format!(
            "gamma fast {:?} brute {:?}; {} resonant excluded, {} mismatches, {} skipped by the shortcut",
            fast.gamma_max,
            brute.gamma_max,
            brute.excluded_resonant,
            brute.classification_mismatches,
            fast.fast_path_skips
        ),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_resonant-nf")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_9() -> (bool, String) {
    let problems = concat!(env!("CARGO_MANIFEST_DIR"), "/problems");
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let mut ok = true;
    let mut notes = Vec::new();
    let dim6 = format!("{problems}/dim6.json");
    let nls = format!("{problems}/nls.json");
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("analyze dim6", vec!["analyze".into(), dim6.clone()]),
        ("analyze nls", vec!["analyze".into(), nls.clone()]),
        (
            "diophantine",
            vec!["diophantine".into(), dim6.clone(), "--tau".into(), "2".into(), "--degree".into(), "6".into()],
        ),
        ("normalize", vec!["normalize".into(), dim6.clone()]),
    ];
    for (label, args) in &runs {
        let mut outs = Vec::new();
        for threads in ["1", "7"] {
            let json = p(&format!("{}-{threads}.json", label.replace(' ', "-")));
            let mut a: Vec<&str> = vec!["--threads", threads, "--json", &json];
            a.extend(args.iter().map(|s| s.as_str()));
            let (code, stdout) = run_cli(&a);
            outs.push((code, stdout, std::fs::read(&json).ok()));
        }
        let same = outs[0].0 == 0 && outs[0].2.is_some() && outs[0] == outs[1];
        ok &= same;
        notes.push(format!("{label} {}", if same { "identical" } else { "DIFFERS" }));
    }
    for threads in ["1", "5"] {
        let out = p(&format!("nf{threads}"));
        let (code, _) = run_cli(&["--threads", threads, "normalize", &dim6, "--out", &out]);
        ok &= code == 0;
    }
    for f in ["normal_form.txt", "transform.txt", "trace.json", "report.json"] {
        let read = |t: &str| std::fs::read(dir.path().join(format!("nf{t}")).join(f)).ok();
        let same = read("1").is_some() && read("1") == read("5");
        ok &= same;
        if !same {
            notes.push(format!("{f} differs"));
        }
    }
    let mut verify = Vec::new();
    for threads in ["1", "7"] {
        let json = p(&format!("verify-{threads}.json"));
        let (code, stdout) =
            run_cli(&["--threads", threads, "--json", &json, "verify", &dim6, "--transform", &p("nf1")]);
        verify.push((code, stdout, std::fs::read(&json).ok()));
    }
    let same = verify[0].0 == 0 && verify[0].2.is_some() && verify[0] == verify[1];
    ok &= same;
    notes.push(format!("verify {}", if same { "identical" } else { "DIFFERS" }));

    let (z1, z2) = sqrt23();
    let mut trips = 0;
    for seed in 1..=10u64 {
        let (w, model) = build_example_dim6(z1, z2, seed, 8).unwrap();
        let module = enumerate_resonance(w.ctx(), &model).unwrap();
        let res = normalize(&w, &model, &module, &KamConfig::default()).unwrap();
        let nf = res.field.total().unwrap();
        let back: Field = field_from_text(*w.ctx(), &field_to_text(&nf)).unwrap();
        let log_back = TransformLog::<GaussRational>::from_text(*w.ctx(), &res.log.to_text()).unwrap();
        let input_back: Field = field_from_text(*w.ctx(), &field_to_text(&w)).unwrap();
        trips += usize::from(back == nf && log_back.generators == res.log.generators && input_back == w);
    }
    ok &= trips == 10;
    notes.push(format!("exact round trips {trips}/10"));
    (ok, notes.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> (bool, String)); 9] = [
        ("1 dim-6 and four-variable resonance analysis", criterion_1),
        ("2 NLS resonance module and momentum", criterion_2),
        ("3 homological solver and nilpotency", criterion_3),
        ("4 normalization, order doubling, elimination oracle", criterion_4),
        ("5 conjugacy scaling on and off Sigma", criterion_5),
        ("6 Lie identities and ideal closure", criterion_6),
        ("7 weight inequalities and separation bound", criterion_7),
        ("8 Diophantine audit, fast path against brute force", criterion_8),
        ("9 determinism across threads and exact round trips", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let (ok, detail) = f();
        failed += usize::from(!ok);
        println!("{} criterion {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
