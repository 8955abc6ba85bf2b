//! One function per subcommand; each returns an [`Outcome`] or a core error.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use mxchaos::cf::suite::{gap_sweep, lemma_suite, Lemma, QUASI_LAMBDA_CAP};
use mxchaos::construction::{build_delta, build_delta_countable, stage_density_checks, ConstructionParams, Schedule};
use mxchaos::ddouble::DD;
use mxchaos::dimension::{
    all_words, canonical_cover, claim_check, claim_exponent, cover_certify, dim_bisect, holder_instance,
    jarnik_bounds, random_cover, CoverElement, CoverInput, HolderInstanceParams, TargetSet,
};
use mxchaos::gauss::{
    box_reference, branch_preimages, exactness_probe, scrambled_stats, EXACTNESS_TARGET, MAX_SHARE, MAX_THRESHOLD,
    MIN_SHARE, MIN_THRESHOLD,
};
use mxchaos::rational::{parse_rational, Rational};
use mxchaos::symbolic::{gamma_erase_chunks, Alphabet, LedgerPoint, SegmentLedger, Stream, SymbolSource};
use mxchaos::verify::{
    find_target_time, proximal_check, return_to_z_check, scrambled_pair_check, verify_target_time, TargetSpec,
};
use mxchaos::{Error, Result};

use crate::args::*;
use crate::report::Outcome;

/// Saved by `construct`: the parameters (with both streams) and the ledger.
#[derive(Serialize, Deserialize)]
pub struct LedgerFile {
    pub version: String,
    pub params: ConstructionParams,
    pub ledger: SegmentLedger,
}

fn read_ledger(path: &Option<std::path::PathBuf>) -> Result<LedgerFile> {
    let path = path.as_ref().ok_or_else(|| Error::InvalidInput("missing --ledger".into()))?;
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// A JSON stream, or whitespace/comma separated symbols repeated forever.
fn read_stream(path: &Path, alphabet: Alphabet) -> Result<Stream> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(&text)?);
    }
    let symbols = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::InvalidInput(format!("{}: bad symbol {t:?}", path.display()))))
        .collect::<Result<Vec<u32>>>()?;
    Stream::periodic(alphabet, symbols)
}

fn stream(file: &Option<std::path::PathBuf>, seed: Option<u64>, alphabet: Alphabet) -> Result<Stream> {
    match (file, seed) {
        (Some(p), _) => read_stream(p, alphabet),
        (None, Some(s)) => Ok(Stream::hashed(alphabet, s)),
        (None, None) => Err(Error::InvalidInput("missing stream".into())),
    }
}

fn dec(v: &num_bigint::BigUint) -> String {
    v.to_string()
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Construct(a) => construct(a),
        Command::Verify(VerifyCmd::Proximal(a)) => proximal(a),
        Command::Verify(VerifyCmd::Return(a)) => return_to_z(a),
        Command::Verify(VerifyCmd::Target(a)) => target(a),
        Command::Verify(VerifyCmd::Scrambled(a)) => scrambled_pair(a),
        Command::Cf(CfCmd::Check(a)) => cf_check(a),
        Command::Cf(CfCmd::Dim(a)) => cf_dim(a),
        Command::Cf(CfCmd::Certify(a)) => certify(a),
        Command::Dim(DimCmd::Weishu(a)) => weishu(a),
        Command::Gauss(GaussCmd::Invariance(a)) => invariance(a),
        Command::Gauss(GaussCmd::Exactness(a)) => exactness(a),
        Command::Gauss(GaussCmd::Scrambled(a)) => gauss_scrambled(a),
    }
}

/// Symbols checked by the erasure identity after `construct`.
const IDENTITY_CHECK_LEN: u64 = 1 << 20;

fn construct(a: &ConstructArgs) -> Result<Outcome> {
    let alphabet = parse_alphabet(a.alphabet.as_deref().unwrap_or("")).map_err(Error::InvalidInput)?;
    let schedule = match a.schedule {
        ScheduleArg::Full => Schedule::Full,
        ScheduleArg::Budget => Schedule::Budget { maps: a.maps.unwrap_or(1), blocks: a.blocks.unwrap_or(1) },
    };
    let z = stream(&a.z, a.z_seed, alphabet)?;
    let x = stream(&a.x, a.x_seed, alphabet)?;
    let mut params = ConstructionParams::new(alphabet, a.stages, schedule, z, x);
    params.literal_zsegments = a.literal_zsegments;
    params.reembed_phi = a.reembed;
    let ledger = match alphabet {
        Alphabet::Countable => build_delta_countable(&params)?,
        Alphabet::Finite(_) => build_delta(&params)?,
    };

    // Erasing the marks must give back the base point.
    let last = ledger.stage_layouts.last().expect("at least one stage");
    let free = (&last.cursor_end - 1u32).min(IDENTITY_CHECK_LEN.into());
    let point = LedgerPoint::new(&ledger, params.x.clone(), params.z.clone())?;
    let mut cursor = num_bigint::BigUint::from(1u32);
    let mut buf = Vec::new();
    let mut identity = true;
    gamma_erase_chunks(&ledger, &point, &free, |chunk| {
        buf.clear();
        params.x.read_into(&cursor, chunk.len(), &mut buf)?;
        identity &= buf == chunk;
        cursor += chunk.len();
        Ok(())
    })?;
    let density = stage_density_checks(&ledger);
    let density_ok = density.iter().all(|r| r.holds);

    let stages: Vec<_> = ledger
        .stage_layouts
        .iter()
        .map(|s| {
            json!({
                "stage": s.stage,
                "table_size": s.table_size,
                "blocks": dec(&s.blocks),
                "s": dec(&s.s),
                "t": dec(&s.t),
                "a1": dec(s.a1()),
                "b": dec(&s.b),
                "start": dec(&s.start),
                "z_end": dec(&s.z_end),
                "end": dec(&s.end),
                "first_anchors": s.anchors.iter().take(8).map(dec).collect::<Vec<_>>(),
            })
        })
        .collect();
    let result = json!({
        "total_length": dec(&ledger.total_length()),
        "total_marks": dec(ledger.total_marks()),
        "segments": ledger.segments.len(),
        "identity_checked": dec(&free),
        "stages": stages,
        "density": density,
        "ledger_out": a.ledger_out,
    });
    if let Some(p) = &a.ledger_out {
        let file = LedgerFile { version: env!("CARGO_PKG_VERSION").into(), params, ledger };
        std::fs::write(p, serde_json::to_string(&file)?)?;
    }
    Ok(Outcome::new(result)
        .assert("erasing the marks recovers the base point", identity)
        .assert("mark density stays below the stage bounds", density_ok))
}

fn proximal(a: &ProximalArgs) -> Result<Outcome> {
    let f = read_ledger(&a.ledger.ledger)?;
    let k = a.stage.unwrap_or(1);
    let d = a.d.unwrap_or(k.min(3));
    let x = a.x_seed.map_or_else(|| f.params.x.clone(), |s| Stream::hashed(f.ledger.alphabet, s));
    let point = LedgerPoint::new(&f.ledger, x, f.params.z.clone())?;
    let r = proximal_check(&point, k, d)?;
    let pass = r.pass;
    Ok(Outcome::new(r)
        .reference("threshold", format!("{}^-{k}", f.ledger.alphabet.base()), "metric on the shift")
        .assert("anchor windows agree with z", pass))
}

fn return_to_z(a: &ReturnArgs) -> Result<Outcome> {
    let f = read_ledger(&a.ledger.ledger)?;
    let k = a.stage.unwrap_or(1);
    let fam = a
        .family_seeds
        .iter()
        .map(|&s| LedgerPoint::new(&f.ledger, Stream::hashed(f.ledger.alphabet, s), f.params.z.clone()))
        .collect::<Result<Vec<_>>>()?;
    let r = return_to_z_check(&fam, &f.params.z, k)?;
    let pass = r.pass;
    Ok(Outcome::new(r).assert("family returns to z together", pass))
}

fn target(a: &TargetArgs) -> Result<Outcome> {
    let f = read_ledger(&a.ledger.ledger)?;
    let k = a.stage.unwrap_or(1);
    let path = a.spec.as_ref().ok_or_else(|| Error::InvalidInput("missing --spec".into()))?;
    let spec: TargetSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let tail = Stream::hashed(f.ledger.alphabet, a.tail_seed);
    let pts = spec.points(&f.ledger, &tail, &f.params.z)?;
    let t = find_target_time(&spec, k, &pts)?;
    let check = verify_target_time(&t.q, &spec, k, &pts)?;
    let pass = check.pass;
    Ok(Outcome::new(json!({ "target_time": t, "check": check })).assert("every member shows its targets", pass))
}

fn scrambled_pair(a: &ScrambledPairArgs) -> Result<Outcome> {
    let f = read_ledger(&a.ledger.ledger)?;
    let al = f.ledger.alphabet;
    let x = LedgerPoint::new(&f.ledger, Stream::hashed(al, a.x_seed.unwrap_or(0)), f.params.z.clone())?;
    let y = LedgerPoint::new(&f.ledger, Stream::hashed(al, a.y_seed.unwrap_or(0)), f.params.z.clone())?;
    let r = scrambled_pair_check(&x, &y, None)?;
    let pass = r.pass;
    Ok(Outcome::new(r).assert("pair comes close and separates", pass))
}

fn cf_check(a: &CheckArgs) -> Result<Outcome> {
    let lemma = match a.lemma.unwrap_or(LemmaArg::Determinant) {
        LemmaArg::Gap => {
            let g = gap_sweep(a.digit_bound, a.depth)?;
            let pass = g.pass;
            return Ok(Outcome::new(g)
                .reference("bound", "1/(3 k^3 q_m (q_m + q_{m-1}))", "closed form")
                .assert("sibling gaps reach the bound", pass));
        }
        LemmaArg::Determinant => Lemma::Determinant,
        LemmaArg::Growth => Lemma::Growth,
        LemmaArg::EraseDigit => Lemma::EraseDigit,
        LemmaArg::Length => Lemma::Length,
        LemmaArg::Tiling => Lemma::Tiling,
        LemmaArg::QuasiMult => Lemma::QuasiMult,
    };
    let r = lemma_suite(lemma, a.samples, a.seed.unwrap_or(0))?;
    let pass = r.pass;
    let mut o = Outcome::new(r);
    if lemma == Lemma::QuasiMult {
        o = o.reference("lambda cap", QUASI_LAMBDA_CAP, "corpus bound for digits <= 30, lengths <= 8");
    }
    Ok(o.assert("no violations", pass))
}

fn cf_dim(a: &CfDimArgs) -> Result<Outcome> {
    let k = a.digit_bound.unwrap_or(2);
    let depth = a.depth.unwrap_or(1);
    let budget_ok = (k as f64).powi(depth as i32) <= a.budget as f64;
    if !budget_ok {
        return Err(Error::BudgetExceeded(format!("{k}^{depth} intervals exceed --budget {}", a.budget)));
    }
    let est = dim_bisect(k, depth, a.tol)?;
    let mut o = Outcome::new(&est);
    if a.jarnik {
        let b = jarnik_bounds(k)?;
        let inside = b.lower <= est.s_lo && est.s_hi <= b.upper;
        o = o
            .reference("lower", b.lower, "closed form 1 - 4/(k ln 2)")
            .reference("upper", b.upper, "closed form 1 - 1/(8 k ln k)")
            .assert("estimate lies in the Jarnik enclosure", inside);
    }
    if let Some(cd) = a.claim_depth {
        let s = claim_exponent(k)?;
        let mut checked = 0u64;
        let mut failures = Vec::new();
        for d in 0..=cd {
            for w in all_words(k, d) {
                let r = claim_check(k, s, &w, None)?;
                checked += 1;
                if !r.holds && failures.len() < 16 {
                    failures.push(w);
                }
            }
        }
        o.result["claim"] = json!({ "s": s, "prefixes": checked, "failures": failures });
        o = o.assert("sibling inequality on every prefix", failures.is_empty());
    }
    Ok(o)
}

fn certify(a: &CertifyArgs) -> Result<Outcome> {
    let k = a.digit_bound;
    let (prefix, elements) = if let Some(p) = &a.cover {
        let inp: CoverInput = serde_json::from_str(&std::fs::read_to_string(p)?)?;
        if !a.prefix.is_empty() && a.prefix != inp.prefix {
            return Err(Error::InvalidInput("--prefix disagrees with the cover file".into()));
        }
        (inp.prefix, Some(inp.elements))
    } else {
        (a.prefix.clone(), None)
    };
    let target = TargetSet::new(prefix, k)?;
    let elements: Vec<CoverElement> = match (elements, a.canonical_depth, a.random_pieces) {
        (Some(e), _, _) => e,
        (None, Some(d), _) => canonical_cover(&target, d)?,
        (None, None, Some(p)) => random_cover(&target, p, a.seed.unwrap_or(0))?,
        _ => return Err(Error::InvalidInput("missing cover".into())),
    };
    let s = match a.s {
        Some(s) => DD::from_f64(s),
        None => claim_exponent(k)?,
    };
    let c = cover_certify(&elements, &target, s)?;
    let holds = c.holds;
    let summary = json!({
        "target": c.target,
        "s": c.s,
        "scale": c.scale,
        "elements": elements.len(),
        "shrunk": c.shrunk.len(),
        "fundamental": c.fundamental.len(),
        "pruned": c.pruned.len(),
        "merged": c.merged.len(),
        "dropped": c.dropped,
        "max_shrink_depth": c.max_shrink_depth,
        "merges": c.merges,
        "sums": c.sums,
        "bound": c.bound,
        "holds": c.holds,
    });
    Ok(Outcome::new(summary)
        .reference("scale", c.scale, "closed form (3 k^3)^-s")
        .assert("cover sum dominates the scaled fundamental sum", holds))
}

fn weishu(a: &WeishuArgs) -> Result<Outcome> {
    let f = read_ledger(&a.ledger.ledger)?;
    let countable = f.ledger.alphabet == Alphabet::Countable;
    if a.holder && !countable {
        return Err(Error::InvalidInput("the Holder instance needs a countable ledger".into()));
    }
    // Box counting only makes sense over a finite alphabet.
    let mut o = if countable {
        if !a.holder {
            return Err(Error::InvalidInput("box counting needs a finite alphabet; pass --holder".into()));
        }
        Outcome::new(json!({ "box_count": null }))
    } else {
        let r = mxchaos::dimension::weishu_check_ledger(&f.ledger, &f.params.z, a.depth, a.tol)?;
        let pass = r.pass;
        Outcome::new(json!({ "box_count": r })).assert("box-counting estimate within tolerance", pass)
    };
    if a.holder {
        let params = HolderInstanceParams {
            k: a.k,
            epsilon: a.epsilon,
            pairs: a.pairs,
            seed: a.seed.unwrap_or(0),
            lambda: a.lambda,
            max_cursor: a.max_cursor,
        };
        let h = holder_instance(&f.ledger, &f.params.z, params)?;
        let pass = h.pass;
        o = o
            .reference("constant bound", h.constant_bound, "closed form (lambda^2/|I(k+1)|^2)^(1/(1+epsilon))")
            .assert("empirical Holder constant below the bound", pass);
        o.result["holder"] = serde_json::to_value(&h)?;
    }
    Ok(o)
}

fn invariance(a: &InvarianceArgs) -> Result<Outcome> {
    use rand::{Rng, SeedableRng};
    let intervals: Vec<(Rational, Rational)> = match (&a.a, &a.b, a.intervals) {
        (Some(x), Some(y), _) => vec![(parse_rational(x)?, parse_rational(y)?)],
        (_, _, Some(n)) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(0));
            let den = num_bigint::BigInt::from(1u64 << 32);
            (0..n)
                .map(|_| {
                    let x: u64 = rng.random_range(0..1u64 << 32);
                    let y: u64 = rng.random_range(x + 1..=1u64 << 32);
                    (Rational::new(x.into(), den.clone()), Rational::new(y.into(), den.clone()))
                })
                .collect()
        }
        _ => return Err(Error::InvalidInput("no interval".into())),
    };
    let reports = intervals.iter().map(|(x, y)| branch_preimages(x, y, a.branches)).collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.pass);
    Ok(Outcome::new(json!({ "intervals": reports }))
        .reference("tail bound", "log2(1 + 1/(M + 1))", "closed form")
        .assert("defect within the tail bound", pass))
}

fn exactness(a: &ExactnessArgs) -> Result<Outcome> {
    let mut reports = Vec::new();
    for s in &a.intervals {
        let iv = parse_interval(s).map_err(Error::InvalidInput)?;
        reports.push(exactness_probe(&[iv], a.steps, a.max_intervals)?);
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(Outcome::new(json!({ "probes": reports }))
        .reference("target measure", 1.0 - EXACTNESS_TARGET, "acceptance threshold")
        .assert("forward images fill the interval", pass))
}

fn gauss_scrambled(a: &GaussScrambledArgs) -> Result<Outcome> {
    let r = scrambled_stats(a.seed.unwrap_or(0), a.pairs, a.horizon, a.k)?;
    let mut o = Outcome::new(json!({
        "seed": r.seed,
        "pairs": r.pairs,
        "horizon": r.horizon,
        "k": r.k,
        "redraws": r.redraws,
        "statistics": r.statistics,
        "per_pair": r.per_pair,
    }))
    .reference("box frequency", box_reference(a.k)?, "closed-form product measure")
    .reference("max distance threshold", MAX_THRESHOLD, "acceptance threshold")
    .reference("max distance share", MAX_SHARE, "acceptance threshold")
    .reference("min distance threshold", MIN_THRESHOLD, "acceptance threshold")
    .reference("min distance share", MIN_SHARE, "acceptance threshold");
    for s in &r.statistics {
        o = o.assert(s.name, s.pass);
    }
    Ok(o)
}
