//! End-to-end acceptance checks. Each check prints one PASS or FAIL line
//! with its runtime; the process exits nonzero if any check fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mxchaos::cf::{
    convergents, erase_digit_ratio, interval_length, mset_gap, quasi_mult_bound, Digit,
};
use mxchaos::construction::{
    build_delta, build_delta_countable, density::endpoint_densities, stage_density_checks, ConstructionParams,
    Schedule,
};
use mxchaos::ddouble::DD;
use mxchaos::dimension::{
    all_words, canonical_cover, claim_check, claim_exponent, cover_certify, dim_bisect, holder_instance,
    jarnik_bounds, random_cover, HolderInstanceParams, TargetSet,
};
use mxchaos::gauss::{branch_preimages, exactness_probe, scrambled_stats};
use mxchaos::rational::{rat, Rational};
use mxchaos::symbolic::{gamma_erase, gamma_erase_chunks, Alphabet, LedgerPoint, SegmentSource, Stream, SymbolSource, ZGroup};
use mxchaos::verify::{find_target_time, proximal_check, verify_target_time, TargetMember, TargetSpec};

const TWO: Alphabet = Alphabet::Finite(2);

// Tolerances and sizes.
const IDENTITY_LIMIT: Duration = Duration::from_secs(1);
const LAYOUT_LIMIT: Duration = Duration::from_secs(1);
const DENSITY_LIMIT: Duration = Duration::from_secs(5);
const PROXIMAL_LIMIT: Duration = Duration::from_secs(5);
const TARGET_LIMIT: Duration = Duration::from_secs(10);
const TARGET_SPECS: usize = 100;
const CONVERGENT_LIMIT: Duration = Duration::from_secs(30);
const CONVERGENT_CASES: usize = 10_000;
const QUASI_LIMIT: Duration = Duration::from_secs(60);
const QUASI_MAX_DIGIT: Digit = 30;
const QUASI_MAX_LEN: usize = 8;
const QUASI_RANDOM_PAIRS: usize = 20_000;
const QUASI_LAMBDA_CAP: f64 = 8.0;
const GAP_LIMIT: Duration = Duration::from_secs(30);
const CLAIM_LIMIT: Duration = Duration::from_secs(60);
const SWEEP_DEPTH: usize = 4;
const JARNIK_LIMIT: Duration = Duration::from_secs(300);
const BISECT_TOL: f64 = 1e-9;
const TWO_DIGIT_TARGET: f64 = 0.531;
const TWO_DIGIT_WINDOW: f64 = 0.01;
const COVER_LIMIT: Duration = Duration::from_secs(120);
const RANDOM_COVERS: u64 = 50;
const GAUSS_LIMIT: Duration = Duration::from_secs(60);
const INVARIANCE_INTERVALS: usize = 100;
const INVARIANCE_BRANCHES: u64 = 1_000_000;
const EXACTNESS_STEPS: u32 = 10;
const EXACTNESS_INTERVAL_CAP: usize = 100_000;
const SCRAMBLED_LIMIT: Duration = Duration::from_secs(180);
const SCRAMBLED_SEED: u64 = 20_240_601;
const HOLDER_LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Debug>(x: E) -> String {
    format!("{x:?}")
}

fn two_letter_params(schedule: Schedule, stages: u32) -> ConstructionParams {
    ConstructionParams::new(TWO, stages, schedule, Stream::hashed(TWO, 2), Stream::hashed(TWO, 1))
}

fn budget4() -> Schedule {
    Schedule::Budget { maps: 4, blocks: 4 }
}

fn identity() -> Outcome {
    let p = two_letter_params(budget4(), 2);
    let led = build_delta(&p).map_err(e)?;
    let st = led.stage(2).map_err(e)?;
    let free = (&st.cursor_end - 1u32).to_usize().unwrap();
    let point = LedgerPoint::new(&led, p.x.clone(), p.z.clone()).map_err(e)?;
    // Streamed, so the 10^8-symbol prefixes are never held in memory.
    let mut cursor = BigUint::one();
    let mut buf = Vec::new();
    gamma_erase_chunks(&led, &point, &BigUint::from(free), |chunk| {
        buf.clear();
        p.x.read_into(&cursor, chunk.len(), &mut buf)?;
        if buf != chunk {
            return Err(mxchaos::Error::CheckFailed(format!("erased word differs from the base point after {cursor}")));
        }
        cursor += chunk.len();
        Ok(())
    })
    .map_err(e)?;
    ensure(cursor == BigUint::from(free) + 1u32, || "erased word is short".into())?;
    let head = gamma_erase(&led, &point, 4096).map_err(e)?;
    ensure(head == p.x.prefix(4096).map_err(e)?, || "erased prefix differs".into())?;
    ensure(BigUint::from(free) + led.total_marks() == led.total_length(), || "free and marked positions do not tile".into())?;
    Ok(format!("{free} free symbols recovered"))
}

fn layout() -> Outcome {
    let led = build_delta(&two_letter_params(Schedule::Full, 1)).map_err(e)?;
    let st = led.stage(1).map_err(e)?;
    let big = |v: u32| BigUint::from(v);
    ensure(st.s == big(1024) && st.t == big(1026), || format!("s = {}, t = {}", st.s, st.t))?;
    let z_starts: Vec<BigUint> = led
        .segments
        .iter()
        .filter(|s| matches!(s.source, SegmentSource::ZSegment { stage: 1, .. }))
        .map(|s| s.start.clone())
        .collect();
    ensure(z_starts == vec![big(1025), big(2049)], || format!("z copies at {z_starts:?}"))?;
    let first_group = led
        .segments
        .iter()
        .filter(|s| matches!(s.source, SegmentSource::ZSegment { group: ZGroup::First, .. }))
        .count();
    ensure(first_group == 1, || format!("{first_group} first-group copies"))?;
    ensure(st.anchor(1, 1) == Some(big(2050)), || format!("r11 = {:?}", st.anchor(1, 1)))?;
    ensure(st.anchor(1, 2) == Some(big(4099)), || format!("r12 = {:?}", st.anchor(1, 2)))?;
    Ok("s1=1024 t1=1026 z at 1025,2049 r11=2050 r12=4099".into())
}

fn density() -> Outcome {
    let led = build_delta(&two_letter_params(budget4(), 3)).map_err(e)?;
    let checks = stage_density_checks(&led);
    let mut checked = 0;
    for r in checks.iter().filter(|r| r.stage >= 2) {
        let below_coarse = if r.strict { r.bound < r.coarse_bound } else { r.bound <= r.coarse_bound };
        ensure(r.holds && below_coarse, || format!("stage {} {:?}: {} vs {}", r.stage, r.case, r.max_density, r.bound))?;
        checked += 1;
    }
    ensure(checked == 6, || format!("only {checked} ranges on stages 2 and 3"))?;
    let ends = endpoint_densities(&led);
    ensure(ends.windows(2).all(|w| w[1] < w[0]), || format!("endpoint densities {ends:?}"))?;
    Ok(format!("{checked} ranges, endpoint densities strictly decreasing over {} stages", ends.len()))
}

fn proximal() -> Outcome {
    let p = two_letter_params(budget4(), 3);
    let led = build_delta(&p).map_err(e)?;
    let mut checks = 0;
    for seed in 0..8 {
        let point = LedgerPoint::new(&led, Stream::hashed(TWO, 100 + seed), p.z.clone()).map_err(e)?;
        for k in 1..=3 {
            let r = proximal_check(&point, k, k.min(3)).map_err(e)?;
            ensure(r.pass, || format!("stage {k} seed {seed} fails"))?;
            checks += 1;
        }
    }

    let mut lp = two_letter_params(budget4(), 2);
    lp.literal_zsegments = true;
    let led = build_delta(&lp).map_err(e)?;
    let a1 = led.stage(2).map_err(e)?.a1().clone();
    let mut overrides = BTreeMap::new();
    overrides.insert(&a1 * 2u32 + 1u32, 2);
    let z = Stream::Sparse { alphabet: TWO, default: 1, overrides };
    let point = LedgerPoint::new(&led, lp.x.clone(), z).map_err(e)?;
    let r = proximal_check(&point, 2, 2).map_err(e)?;
    ensure(!r.pass && r.slots[0].distance.first_difference.is_none(), || "literal copies should agree at j=1".into())?;
    ensure(r.slots[1].distance.first_difference.is_some(), || "literal copies should fail at j=2".into())?;
    Ok(format!("{checks} anchor checks pass; literal copies fail at j=2"))
}

fn targeting() -> Outcome {
    let led = build_delta(&two_letter_params(Schedule::Full, 1)).map_err(e)?;
    let st = led.stage(1).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..TARGET_SPECS {
        let mut members = Vec::new();
        for prefix in 1..=2u32 {
            if rng.random_bool(0.7) || members.is_empty() && prefix == 2 {
                members.push(TargetMember { x_prefix: vec![prefix], targets: vec![vec![rng.random_range(1..=2)]] });
            }
        }
        let spec = TargetSpec { d: 1, members };
        let z = Stream::hashed(TWO, rng.random());
        let pts = spec.points(&led, &Stream::hashed(TWO, rng.random()), &z).map_err(e)?;
        let t = find_target_time(&spec, 1, &pts).map_err(|x| format!("case {case}: {x}"))?;
        let check = verify_target_time(&t.q, &spec, 1, &pts).map_err(e)?;
        ensure(check.pass, || format!("case {case}: windows {:?} miss", check.failures))?;
        let block = t.block.to_usize().unwrap();
        for j in 1..=st.table_size {
            let r = st.anchor(block, j).ok_or_else(|| format!("case {case}: block {block} missing"))?;
            ensure(&t.q * j + 1u32 == r, || format!("case {case}: j q + 1 != r at j = {j}"))?;
        }
    }
    Ok(format!("{TARGET_SPECS} random specs hit their targets"))
}

// Backward evaluation of a finite expansion.
fn oracle_value(d: &[Digit]) -> Rational {
    let mut x = Rational::zero();
    for &a in d.iter().rev() {
        x = (Rational::from_integer(BigInt::from(a)) + x).recip();
    }
    x
}

fn oracle_q(d: &[Digit]) -> BigUint {
    let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
    for &a in d {
        let q2 = &q1 * a + &q0;
        q0 = q1;
        q1 = q2;
    }
    q1
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Digit> {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0 => rng.random_range(1..=1_000_000_000),
            1..=3 => rng.random_range(1..=1000),
            _ => rng.random_range(1..=4),
        })
        .collect()
}

fn convergent_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..CONVERGENT_CASES {
        let w = random_word(&mut rng, 24);
        let c = convergents(&w).map_err(e)?;
        for n in 0..=w.len() as isize {
            let det = BigInt::from(c.p(n) * c.q(n - 1)) - BigInt::from(c.p(n - 1) * c.q(n));
            let want = if n % 2 == 0 { -BigInt::one() } else { BigInt::one() };
            ensure(det == want, || format!("determinant fails for {w:?} at n = {n}"))?;
            if n >= 1 {
                let q = c.q(n);
                ensure(q * q >= BigUint::one() << (n as u64 - 1), || format!("growth fails for {w:?} at n = {n}"))?;
            }
        }
        ensure(c.last_q() == &oracle_q(&w), || format!("denominator mismatch for {w:?}"))?;

        let k = rng.random_range(1..=w.len());
        let r = erase_digit_ratio(&w, k).map_err(e)?;
        let mut erased = w.clone();
        let ak = erased.remove(k - 1);
        let ratio = Rational::new(oracle_q(&w).into(), oracle_q(&erased).into());
        let lo = Rational::new(BigInt::from(ak) + 1, 2.into());
        let hi = Rational::from_integer(BigInt::from(ak) + 1);
        ensure(r.ratio == ratio && ratio >= lo && ratio <= hi, || format!("erase bound fails for {w:?}, k = {k}"))?;

        let mut bumped = w.clone();
        *bumped.last_mut().unwrap() += 1;
        let len = (oracle_value(&w) - oracle_value(&bumped)).abs();
        ensure(interval_length(&w).map_err(e)? == len, || format!("length formula fails for {w:?}"))?;

        // Children 1..m plus the tail gap between [w, m+1] and [w] fill I(w).
        let m = rng.random_range(1..=6u64);
        let mut total = Rational::zero();
        for i in 1..=m {
            let mut child = w.clone();
            child.push(i);
            total += interval_length(&child).map_err(e)?;
        }
        let mut tail = w.clone();
        tail.push(m + 1);
        total += (oracle_value(&tail) - oracle_value(&w)).abs();
        ensure(total == len, || format!("children do not tile I({w:?}) at case {case}"))?;
    }
    Ok(format!("{CONVERGENT_CASES} cases x 5 identities, zero violations"))
}

fn quasi_corpus() -> Vec<(Vec<Digit>, Vec<Digit>)> {
    let mut extremes = Vec::new();
    for len in 1..=QUASI_MAX_LEN {
        for d in [1, QUASI_MAX_DIGIT] {
            extremes.push(vec![d; len]);
        }
        extremes.push((0..len).map(|i| if i % 2 == 0 { 1 } else { QUASI_MAX_DIGIT }).collect());
        extremes.push((0..len).map(|i| if i % 2 == 0 { QUASI_MAX_DIGIT } else { 1 }).collect());
    }
    let mut corpus: Vec<_> = extremes.iter().flat_map(|u| extremes.iter().map(move |v| (u.clone(), v.clone()))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let word = |rng: &mut ChaCha8Rng| -> Vec<Digit> {
        let len = rng.random_range(1..=QUASI_MAX_LEN);
        (0..len).map(|_| rng.random_range(1..=QUASI_MAX_DIGIT)).collect()
    };
    for _ in 0..QUASI_RANDOM_PAIRS {
        let u = word(&mut rng);
        let v = word(&mut rng);
        corpus.push((u, v));
    }
    corpus
}

fn quasi_lambda() -> Result<f64, String> {
    let q = quasi_mult_bound(&quasi_corpus()).map_err(e)?;
    Ok(mxchaos::rational::to_f64(&q.lambda))
}

fn quasi_mult() -> Outcome {
    let lambda = quasi_lambda()?;
    ensure(lambda.is_finite() && lambda <= QUASI_LAMBDA_CAP, || format!("lambda = {lambda}"))?;
    Ok(format!("lambda = {lambda:.6} over {} pairs", quasi_corpus().len()))
}

fn words_up_to(k: Digit, depth: usize) -> impl Iterator<Item = Vec<Digit>> {
    (0..=depth).flat_map(move |d| all_words(k, d))
}

fn gap_sweep() -> Outcome {
    let mut checked = 0u64;
    for k in 2..=10 {
        for w in words_up_to(k, SWEEP_DEPTH) {
            for s in 1..=k {
                for t in s + 1..=k {
                    let g = mset_gap(&w, k, s, t).map_err(e)?;
                    // Independent bound from the oracle denominators.
                    let mut prev = w.clone();
                    let q = oracle_q(&w);
                    let q1 = if w.is_empty() { BigUint::zero() } else { prev.pop(); oracle_q(&prev) };
                    let bound = Rational::new(1.into(), BigInt::from(3 * k * k * k) * BigInt::from(&q * (&q + &q1)));
                    ensure(g.gap >= bound && g.bound == bound, || format!("gap fails at {w:?}, k = {k}, ({s}, {t})"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} sibling pairs"))
}

fn claim_sweep() -> Outcome {
    let mut checked = 0;
    for k in [9, 10] {
        let s = claim_exponent(k).map_err(e)?;
        let want = 1.0 - 4.0 / (k as f64 * std::f64::consts::LN_2);
        ensure((s.to_f64() - want).abs() < 1e-15, || format!("exponent {} for k = {k}", s.to_f64()))?;
        for w in words_up_to(k, SWEEP_DEPTH) {
            let r = claim_check(k, s, &w, None).map_err(e)?;
            ensure(r.holds && r.margin >= DD::ZERO && r.beta_in_range, || format!("claim fails at {w:?}, k = {k}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} prefixes"))
}

// Brute-force pressure root: all words of the given depth, f64 throughout.
fn oracle_root(k: u64, depth: u32) -> f64 {
    let mut qs: Vec<(f64, f64)> = vec![(1.0, 0.0)];
    for _ in 0..depth {
        qs = qs.iter().flat_map(|&(q, q0)| (1..=k).map(move |a| (a as f64 * q + q0, q))).collect();
    }
    let logs: Vec<f64> = qs.iter().map(|&(q, q0)| -(q * (q + q0)).ln()).collect();
    let f = |s: f64| logs.iter().map(|l| (s * l).exp()).sum::<f64>();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn jarnik() -> Outcome {
    let mut out = Vec::new();
    for (k, depth) in [(10, 5), (20, 4)] {
        let est = dim_bisect(k, depth, BISECT_TOL).map_err(e)?;
        let b = jarnik_bounds(k).map_err(e)?;
        ensure(b.lower <= est.s_lo && est.s_hi <= b.upper, || {
            format!("k = {k}: [{}, {}] outside [{}, {}]", est.s_lo, est.s_hi, b.lower, b.upper)
        })?;
        out.push(format!("k={k}: {:.5}", est.s.to_f64()));
    }
    let est = dim_bisect(2, 16, BISECT_TOL).map_err(e)?;
    let oracle = oracle_root(2, 16);
    let s = est.s.to_f64();
    ensure((s - oracle).abs() < 1e-7, || format!("k = 2: {s} vs brute force {oracle}"))?;
    ensure((s - TWO_DIGIT_TARGET).abs() <= TWO_DIGIT_WINDOW, || format!("k = 2: {s}"))?;
    out.push(format!("k=2: {s:.5} (brute force {oracle:.5})"));
    Ok(out.join(", "))
}

fn covers() -> Outcome {
    let target = TargetSet::new(vec![1; 8], 10).map_err(e)?;
    let s = claim_exponent(10).map_err(e)?;
    let mut covers = vec![canonical_cover(&target, 11).map_err(e)?];
    for seed in 0..RANDOM_COVERS {
        covers.push(random_cover(&target, 49, seed).map_err(e)?);
    }
    let mut worst = f64::INFINITY;
    for (i, c) in covers.iter().enumerate() {
        let cert = cover_certify(c, &target, s).map_err(|x| format!("cover {i}: {x}"))?;
        let chain = [cert.sums.input, cert.sums.shrunk, cert.bound];
        ensure(cert.holds && cert.bound > DD::ZERO, || format!("cover {i} not certified"))?;
        ensure(chain[2] <= chain[0] * DD::from_f64(1.0 + 1e-26), || format!("cover {i}: bound above input sum"))?;
        worst = worst.min(cert.bound.to_f64());
    }
    Ok(format!("{} covers certified, smallest bound {worst:.3e}", covers.len()))
}

fn gauss() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let den: BigInt = BigInt::one() << 32;
    let mut worst = 0.0f64;
    for i in 0..INVARIANCE_INTERVALS {
        let mut a: u64 = rng.random_range(0..1u64 << 32);
        let mut b: u64 = rng.random_range(0..=1u64 << 32);
        if a == b {
            b = a + 1;
        }
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let (a, b) = (Rational::new(a.into(), den.clone()), Rational::new(b.into(), den.clone()));
        let r = branch_preimages(&a, &b, INVARIANCE_BRANCHES).map_err(e)?;
        ensure(r.pass, || format!("interval {i}: defect {} above {}", r.defect, r.tail_bound))?;
        let diff = (r.defect - r.closed_form_defect).abs().to_f64();
        ensure(diff < 1e-15, || format!("interval {i}: defect off the closed form by {diff}"))?;
        worst = worst.max(diff);
    }
    let corpus = [
        (rat(1, 3), rat(1, 2)),
        (rat(9, 10), rat(19, 20)),
        (rat(1, 2), rat(501, 1000)),
        (rat(0, 1), rat(1, 1000)),
        (rat(999, 1000), rat(1, 1)),
        (rat(2, 5), rat(3, 7)),
        (rat(61, 100), rat(62, 100)),
        (rat(1, 7), rat(1, 6)),
    ];
    let mut steps = Vec::new();
    for (a, b) in corpus {
        let r = exactness_probe(&[(a.clone(), b.clone())], EXACTNESS_STEPS, EXACTNESS_INTERVAL_CAP).map_err(e)?;
        let n = r.reached.ok_or_else(|| format!("({a}, {b}) stays at {}", r.trajectory.last().unwrap()))?;
        steps.push(n);
    }
    Ok(format!("{INVARIANCE_INTERVALS} intervals, worst closed-form gap {worst:.1e}; exactness steps {steps:?}"))
}

fn scrambled() -> Outcome {
    let r = scrambled_stats(SCRAMBLED_SEED, 50, 10_000, 4).map_err(e)?;
    let summary: Vec<String> =
        r.statistics.iter().map(|s| format!("{:.4} (ref {:.4})", s.empirical, s.reference)).collect();
    ensure(r.pass, || format!("statistics {summary:?}"))?;
    ensure((r.statistics[2].reference - 0.0620).abs() < 5e-5, || "box reference drifted".into())?;
    Ok(summary.join(", "))
}

fn holder() -> Outcome {
    let lambda = quasi_lambda()?;
    let a = Alphabet::Countable;
    let z = Stream::Hashed { alphabet: a, seed: 3, max_symbol: 5, w_capped: true };
    let p = ConstructionParams::new(a, 3, Schedule::Budget { maps: 3, blocks: 3 }, z.clone(), Stream::constant(a, 1));
    let led = build_delta_countable(&p).map_err(e)?;
    let params = HolderInstanceParams { k: 5, epsilon: 0.5, pairs: 200, seed: 7, lambda, max_cursor: 20_000 };
    let h = holder_instance(&led, &z, params).map_err(e)?;
    let bound = (lambda * lambda * 42.0 * 42.0).powf(1.0 / 1.5);
    ensure((h.constant_bound - bound).abs() < 1e-9 * bound, || "constant bound mismatch".into())?;
    ensure(h.witness.used == 200, || format!("{} pairs used", h.witness.used))?;
    ensure(h.pass && h.witness.c <= bound, || format!("c = {} above {bound}", h.witness.c))?;
    Ok(format!("c = {:.4} <= {bound:.2}", h.witness.c))
}

fn main() {
    let checks: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("construction identity", IDENTITY_LIMIT, identity),
        ("stage-one layout", LAYOUT_LIMIT, layout),
        ("mark density bounds", DENSITY_LIMIT, density),
        ("multiply proximal anchors", PROXIMAL_LIMIT, proximal),
        ("targeting round trip", TARGET_LIMIT, targeting),
        ("convergent identities", CONVERGENT_LIMIT, convergent_suite),
        ("quasi-multiplicativity", QUASI_LIMIT, quasi_mult),
        ("sibling gap bound", GAP_LIMIT, gap_sweep),
        ("claim inequality", CLAIM_LIMIT, claim_sweep),
        ("Jarnik enclosure", JARNIK_LIMIT, jarnik),
        ("cover certifier", COVER_LIMIT, covers),
        ("Gauss invariance and exactness", GAUSS_LIMIT, gauss),
        ("scrambled statistics", SCRAMBLED_LIMIT, scrambled),
        ("Holder witness", HOLDER_LIMIT, holder),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in checks.into_iter().enumerate() {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = t.elapsed();
        let res = res.and_then(|m| {
            if took <= limit {
                Ok(m)
            } else {
                Err(format!("took {took:.2?}, limit {limit:?}"))
            }
        });
        match res {
            Ok(m) => println!("PASS {:>2} {name} [{took:.2?}]: {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{took:.2?}]: {m}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance checks failed");
        std::process::exit(1);
    }
    println!("all 14 acceptance checks passed");
}
