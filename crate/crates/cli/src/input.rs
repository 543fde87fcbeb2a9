//! Parsing of command-line values and input files.

use std::fs;

use anyhow::{bail, Context, Result};
use tenformat::tensor::TensorJson;
use tenformat::tns::RankFunctionJson;
use tenformat::{AnyTensor, BinaryTree, LeafOrdering, RankFunction, TreeSpec};

/// Inline JSON if the value starts with `{` or `[`, otherwise a file path
/// (`-` reads standard input).
fn json_source(value: &str) -> Result<String> {
    let trimmed = value.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(value.to_string());
    }
    if value == "-" {
        return std::io::read_to_string(std::io::stdin()).context("reading standard input");
    }
    fs::read_to_string(value).with_context(|| format!("reading {value}"))
}

/// `perfect` (needs `k`), `traintrack` (needs `n`, or `2^k`), or tree JSON.
pub fn tree(kind: &str, k: Option<usize>, n: Option<usize>) -> Result<BinaryTree> {
    let spec = match kind {
        "perfect" | "hf" => match (k, n) {
            (Some(k), _) => TreeSpec::Perfect { k },
            (None, Some(n)) if n.is_power_of_two() => TreeSpec::Perfect {
                k: n.trailing_zeros() as usize,
            },
            _ => bail!("a perfect tree needs --k (or --n a power of two)"),
        },
        "traintrack" | "train-track" | "tt" => match (n, k) {
            (Some(n), _) => TreeSpec::Traintrack { n },
            (None, Some(k)) if k < 32 => TreeSpec::Traintrack { n: 1 << k },
            _ => bail!("a train-track tree needs --n (or --k)"),
        },
        other => serde_json::from_str(&json_source(other)?)
            .with_context(|| format!("malformed tree description {other}"))?,
    };
    Ok(spec.build()?)
}

/// `1,5,2,6` or `[1,5,2,6]`: 1-based image of each leaf slot.
pub fn ordering(value: &str, n: usize) -> Result<LeafOrdering> {
    let entries: Vec<usize> = value
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad ordering entry {s:?}")))
        .collect::<Result<_>>()?;
    if entries.len() != n {
        bail!("ordering has {} entries, expected {n}", entries.len());
    }
    Ok(LeafOrdering::from_one_based(&entries)?)
}

pub fn optional_ordering(value: Option<&str>, n: usize) -> Result<LeafOrdering> {
    value.map_or_else(|| Ok(LeafOrdering::identity(n)), |v| ordering(v, n))
}

/// An integer for a constant rank, otherwise rank-function JSON.
pub fn rank_function(value: &str, tree: &BinaryTree) -> Result<RankFunction> {
    if let Ok(r) = value.trim().parse::<usize>() {
        return Ok(RankFunction::constant(tree, r));
    }
    let json: RankFunctionJson =
        serde_json::from_str(&json_source(value)?).context("malformed rank function")?;
    Ok(RankFunction::from_json(&json, tree)?)
}

pub fn dims(value: Option<&[usize]>, n: usize) -> Result<Vec<usize>> {
    match value {
        None => Ok(vec![2; n]),
        Some(d) if d.len() == 1 => Ok(vec![d[0]; n]),
        Some(d) if d.len() == n => Ok(d.to_vec()),
        Some(d) => bail!("{} dimensions given for {n} leaves", d.len()),
    }
}

pub fn tensor(value: &str) -> Result<AnyTensor> {
    let json: TensorJson =
        serde_json::from_str(&json_source(value)?).context("malformed tensor JSON")?;
    Ok(AnyTensor::from_json(&json)?)
}
