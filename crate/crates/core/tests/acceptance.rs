//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use tenformat::harness::{dimension_sweep, verify_cherry_sweep, verify_containment, verify_hackbusch_sweep, OrderingFilter};
use tenformat::linalg::Field;
use tenformat::transfer::{hf_to_tt_bound, standard_pair_exponents, tt_to_hf_bound};
use tenformat::trees::{cos_cover_number, ones_count};
use tenformat::witness::naive_rank_gap_example;
use tenformat::{rng_from_seed, BinaryTree, LeafOrdering, LeafSet, Matrix, Rational, RankFunction, DEFAULT_FLOAT_TOL};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(limit: Option<Duration>, start: Instant, detail: String) -> Outcome {
    let elapsed = start.elapsed();
    match limit {
        Some(l) if elapsed > l => Err(format!("{detail}; took {elapsed:.2?}, limit {l:?}")),
        _ => Ok(format!("{detail}; {elapsed:.2?}")),
    }
}

fn rank_five_example() -> Outcome {
    let start = Instant::now();
    let mut hits = 0;
    let mut observed = std::collections::BTreeMap::new();
    let mut naive_ok = true;
    for seed in 0..100u64 {
        let (_, ex) = naive_rank_gap_example(&mut rng_from_seed(seed)).map_err(|e| e.to_string())?;
        *observed.entry(ex.rank).or_insert(0) += 1;
        naive_ok &= ex.naive == 8;
        hits += usize::from(ex.rank == 5);
    }
    let detail = format!("rank 5 on {{1,2,3,5}} in {hits}/100 seeds (observed ranks {observed:?}), naive 8: {naive_ok}");
    if hits < 99 || !naive_ok {
        return Err(detail);
    }
    within(Some(Duration::from_secs(10)), start, detail)
}

fn hf_in_tt() -> Outcome {
    let start = Instant::now();
    let hf = BinaryTree::perfect(3);
    let tt = BinaryTree::train_track(8).map_err(|e| e.to_string())?;
    let c = hf_to_tt_bound(3).map_err(|e| e.to_string())?;
    let bound = 2usize.pow(c as u32);
    let failures = verify_containment(
        &hf,
        &RankFunction::constant(&hf, 2),
        &tt,
        &LeafOrdering::identity(8),
        &RankFunction::constant(&tt, bound),
        &[2; 8],
        100,
        0xACCE_0002,
    )
    .map_err(|e| e.to_string())?;
    let detail = format!("HF(2,3) samples in TT({bound},8): {} failures of 100", failures.len());
    if !failures.is_empty() || bound != 4 {
        return Err(detail);
    }
    within(Some(Duration::from_secs(30)), start, detail)
}

fn tt_in_hf() -> Outcome {
    let start = Instant::now();
    let hf = BinaryTree::perfect(3);
    let tt = BinaryTree::train_track(8).map_err(|e| e.to_string())?;
    let c = tt_to_hf_bound(3).map_err(|e| e.to_string())?;
    let bound = 2usize.pow(c as u32);
    let failures = verify_containment(
        &tt,
        &RankFunction::constant(&tt, 2),
        &hf,
        &LeafOrdering::identity(8),
        &RankFunction::constant(&hf, bound),
        &[2; 8],
        100,
        0xACCE_0003,
    )
    .map_err(|e| e.to_string())?;
    let detail = format!("TT(2,8) samples in HF({bound},3): {} failures of 100", failures.len());
    if !failures.is_empty() || bound != 4 {
        return Err(detail);
    }
    within(None, start, detail)
}

fn hackbusch_exhaustive() -> Outcome {
    let start = Instant::now();
    let report = verify_hackbusch_sweep(3, 2, OrderingFilter::All, 0xACCE_0004).map_err(|e| e.to_string())?;
    let low = report.items.iter().filter(|i| !i.ok || i.rank < 4).count();
    let detail = format!(
        "{} orderings, {} verified, minimum prefix rank {:?}",
        report.summary.total, report.summary.verified, report.summary.min_rank
    );
    if report.summary.total != 5040 || low > 0 || !report.all_ok() {
        return Err(detail);
    }
    within(Some(Duration::from_secs(300)), start, detail)
}

fn cherry_random() -> Outcome {
    let start = Instant::now();
    let report = verify_cherry_sweep(3, 2, OrderingFilter::Sample(500), 0xACCE_0005).map_err(|e| e.to_string())?;
    let exact = report.items.iter().filter(|i| i.ok && i.rank == 4).count();
    let detail = format!("{exact}/{} matchings give a verified TT(2,8) member with cherry rank 4", report.summary.total);
    if exact != 500 || !report.all_ok() {
        return Err(detail);
    }
    within(None, start, detail)
}

fn dimension_formula() -> Outcome {
    let start = Instant::now();
    let cases = dimension_sweep(
        8,
        &[1, 2, 3],
        |n| {
            vec![
                vec![2; n],
                vec![3; n],
                (0..n).map(|i| 2 + i % 2).collect(),
                (0..n).map(|i| 3 - i % 2).collect(),
            ]
        },
        0xACCE_0006,
    )
    .map_err(|e| e.to_string())?;
    let bad: Vec<_> = cases.iter().filter(|c| !c.agrees).collect();
    let detail = format!("{} cases, {} disagreements", cases.len(), bad.len());
    if !bad.is_empty() {
        return Err(format!("{detail}; first {:?}", bad[0]));
    }
    within(None, start, detail)
}

fn digit_lemma() -> Outcome {
    let start = Instant::now();
    let mut checked = 0u64;
    for k in 0..=16u32 {
        let n = 1u64 << k;
        let c = k.div_ceil(2);
        for j in 0..=n {
            if ones_count(j).min(ones_count(n - j)) > c {
                return Err(format!("k = {k}, j = {j}"));
            }
            checked += 1;
        }
    }
    within(Some(Duration::from_secs(1)), start, format!("{checked} pairs (k, j)"))
}

fn cover_consistency() -> Outcome {
    let start = Instant::now();
    let mut intervals = 0;
    for k in 0..=4usize {
        let tree = BinaryTree::perfect(k);
        let n = 1usize << k;
        for j in 1..=n {
            let h = cos_cover_number(&tree, &LeafSet::range(n, 0, j)).map_err(|e| e.to_string())?;
            if h as u32 != ones_count(j as u64) {
                return Err(format!("k = {k}, [1..{j}]: cover {h}"));
            }
            intervals += 1;
        }
    }
    let mut exps = Vec::new();
    for k in 1..=5usize {
        let (fwd, back) = standard_pair_exponents(k).map_err(|e| e.to_string())?;
        let want_fwd = k.div_ceil(2);
        let want_back = if k >= 3 { 2 } else { 1 };
        let bounds = (hf_to_tt_bound(k).map_err(|e| e.to_string())?, tt_to_hf_bound(k).map_err(|e| e.to_string())?);
        if (fwd, back) != (want_fwd, want_back) || bounds != (fwd, back) {
            return Err(format!("k = {k}: exponents ({fwd}, {back}), bounds {bounds:?}"));
        }
        exps.push(format!("k={k}:({fwd},{back})"));
    }
    within(None, start, format!("{intervals} intervals match digit counts; exponents {}", exps.join(" ")))
}

fn random_matrix(rng: &mut impl Rng) -> Matrix<Rational> {
    let rows = rng.gen_range(1..=64);
    let cols = rng.gen_range(1..=64);
    if rng.gen_bool(0.5) {
        Matrix::from_fn(rows, cols, |_, _| Rational::from_integer(rng.gen_range(-1_000_000..=1_000_000).into()))
    } else {
        let inner = rng.gen_range(1..=rows.min(cols));
        let a = Matrix::from_fn(rows, inner, |_, _| Rational::from_integer(rng.gen_range(-100..=100).into()));
        let b = Matrix::from_fn(inner, cols, |_, _| Rational::from_integer(rng.gen_range(-100..=100).into()));
        a.matmul(&b)
    }
}

fn rank_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(0xACCE_0009);
    let mut deficient = 0;
    for i in 0..1000 {
        let m = random_matrix(&mut rng);
        let exact = Rational::rank(&m, 0.0).map_err(|e| e.to_string())?;
        let float = f64::rank(&m.map(tenformat::linalg::rational_to_f64), DEFAULT_FLOAT_TOL).map_err(|e| e.to_string())?;
        if exact != float {
            return Err(format!("matrix {i} ({}x{}): exact {exact}, float {float}", m.rows(), m.cols()));
        }
        deficient += usize::from(exact < m.rows().min(m.cols()));
    }
    within(None, start, format!("1000 matrices agree ({deficient} rank-deficient)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("naive rank gap example on HF(2,3)", rank_five_example),
        ("HF(2,3) inside TT(4,8)", hf_in_tt),
        ("TT(2,8) inside HF(4,3)", tt_in_hf),
        ("Hackbusch witnesses for every ordering at k = 3", hackbusch_exhaustive),
        ("cherry witnesses for 500 random matchings", cherry_random),
        ("dimension formula against the Jacobian oracle", dimension_formula),
        ("digit lemma for k <= 16", digit_lemma),
        ("cover numbers and transfer exponents", cover_consistency),
        ("exact and floating-point rank agree", rank_oracles),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
