//! Resolution of tensor specs, symmetry selections and rank values.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use barriers_core::{
    builtin_rank, cw_standard_action, orbits, parse_tensor, AxisPermutations, BuiltinId,
    OrbitPartition, Permutation, Presentation, SupportAction, Tensor,
};

/// A resolved tensor: stable id string plus the tensor itself.
pub struct ResolvedTensor {
    pub id: String,
    pub tensor: Tensor,
    /// `q` when the tensor is a built-in CW family member.
    pub cw_q: Option<usize>,
    /// Registry rank, when the id is covered by it.
    pub registry_rank: Option<f64>,
}

/// Accepts `diag:n`, `mm:l,m,n`, `cw:q`, `cwsmall:q`, `file:PATH`, or a bare
/// path to a tensor document.
pub fn resolve_tensor(spec: &str) -> Result<ResolvedTensor> {
    if let Ok(id) = spec.parse::<BuiltinId>() {
        let tensor = id.build().with_context(|| format!("building tensor `{id}`"))?;
        let cw_q = match id {
            BuiltinId::CwBig(q) | BuiltinId::CwSmall(q) => Some(q),
            _ => None,
        };
        let registry_rank = builtin_rank(&id).map(|e| e.asymptotic_rank);
        return Ok(ResolvedTensor { id: id.to_string(), tensor, cw_q, registry_rank });
    }
    let path = spec.strip_prefix("file:").unwrap_or(spec);
    if !Path::new(path).exists() {
        bail!("`{spec}` is neither a built-in tensor id nor an existing file");
    }
    let doc = fs::read_to_string(path).with_context(|| format!("reading `{path}`"))?;
    let tensor = parse_tensor(&doc).with_context(|| format!("parsing `{path}`"))?;
    Ok(ResolvedTensor { id: path.to_string(), tensor, cw_q: None, registry_rank: None })
}

/// Resolves `--symmetry`: `none`/absent for the trivial action, `cw` for the
/// built-in CW action (valid only on CW tensors), `file:PATH` for a
/// user-supplied action document.
pub fn resolve_partition(
    tensor: &ResolvedTensor,
    symmetry: Option<&str>,
) -> Result<Option<OrbitPartition>> {
    let Some(sym) = symmetry else { return Ok(None) };
    match sym {
        "none" => Ok(None),
        "cw" => {
            let q = tensor.cw_q.ok_or_else(|| {
                anyhow!(
                    "--symmetry cw applies only to cw:q / cwsmall:q tensors, not `{}`",
                    tensor.id
                )
            })?;
            let action = cw_standard_action(q, tensor.tensor.dims().0);
            let part = orbits(tensor.tensor.support(), &action)
                .context("applying the built-in CW action")?;
            Ok(Some(part))
        }
        other => {
            let path = other
                .strip_prefix("file:")
                .ok_or_else(|| anyhow!("--symmetry must be `cw`, `none` or `file:PATH`"))?;
            let doc = fs::read_to_string(path).with_context(|| format!("reading `{path}`"))?;
            let action = parse_action(&doc)?;
            let part = orbits(tensor.tensor.support(), &action)
                .with_context(|| format!("applying action from `{path}`"))?;
            Ok(Some(part))
        }
    }
}

/// Parses the action document format: per generator, three lines
/// `axis1: p0 p1 ...`, `axis2: ...`, `axis3: ...` with images in index order.
pub fn parse_action(doc: &str) -> Result<SupportAction> {
    let mut axis_lines: Vec<(usize, Vec<usize>)> = Vec::new();
    for (lineno, raw) in doc.lines().enumerate() {
        let text = raw.split('#').next().unwrap_or("");
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        let (head, rest) = text
            .split_once(':')
            .ok_or_else(|| anyhow!("line {}: expected `axisN: images...`", lineno + 1))?;
        let axis = match head.trim() {
            "axis1" => 0,
            "axis2" => 1,
            "axis3" => 2,
            other => bail!("line {}: unknown axis `{other}`", lineno + 1),
        };
        let images: Vec<usize> = rest
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| anyhow!("line {}: bad image `{t}`", lineno + 1)))
            .collect::<Result<_>>()?;
        axis_lines.push((axis, images));
    }
    if axis_lines.is_empty() {
        bail!("action document has no generator lines");
    }
    if axis_lines.len() % 3 != 0 {
        bail!("action document must contain axis1/axis2/axis3 lines in groups of three");
    }
    let mut generators = Vec::new();
    for chunk in axis_lines.chunks(3) {
        let mut axes: [Option<Permutation>; 3] = [None, None, None];
        for (axis, images) in chunk {
            if axes[*axis].is_some() {
                bail!("generator lists axis{} twice", axis + 1);
            }
            axes[*axis] = Some(
                Permutation::new(images.clone())
                    .map_err(|e| anyhow!("axis{}: {e}", axis + 1))?,
            );
        }
        let [a, b, c] = axes;
        let (a, b, c) = (
            a.ok_or_else(|| anyhow!("generator missing axis1"))?,
            b.ok_or_else(|| anyhow!("generator missing axis2"))?,
            c.ok_or_else(|| anyhow!("generator missing axis3"))?,
        );
        generators.push(AxisPermutations { axes: [a, b, c] });
    }
    Ok(SupportAction { generators })
}

/// Rank from the flag, falling back to the registry.
pub fn resolve_rank(tensor: &ResolvedTensor, flag: Option<f64>) -> Result<f64> {
    flag.or(tensor.registry_rank).ok_or_else(|| {
        anyhow!(
            "no built-in asymptotic rank for `{}`; supply --rank",
            tensor.id
        )
    })
}

/// Builds the presentation (with optional orbit reduction) for a resolved
/// tensor.
pub fn presentation(tensor: &ResolvedTensor, partition: Option<OrbitPartition>) -> Result<Presentation> {
    match partition {
        Some(part) => Presentation::with_partition(
            tensor.id.clone(),
            tensor.tensor.support().clone(),
            part,
        )
        .map_err(|e| anyhow!("{e}")),
        None => Ok(Presentation::new(tensor.id.clone(), tensor.tensor.support().clone())),
    }
}

/// Parses a mixed-sequence factor spec `TENSOR[*WEIGHT[*RANK]]`.
pub fn parse_factor_spec(spec: &str) -> Result<(String, f64, Option<f64>)> {
    let mut parts = spec.split('*');
    let tensor = parts.next().unwrap_or_default().to_string();
    if tensor.is_empty() {
        bail!("empty tensor in factor spec `{spec}`");
    }
    let weight = match parts.next() {
        Some(w) => w
            .parse::<f64>()
            .map_err(|_| anyhow!("bad weight `{w}` in factor spec `{spec}`"))?,
        None => 1.0,
    };
    let rank = match parts.next() {
        Some(r) => Some(
            r.parse::<f64>()
                .map_err(|_| anyhow!("bad rank `{r}` in factor spec `{spec}`"))?,
        ),
        None => None,
    };
    if parts.next().is_some() {
        bail!("factor spec `{spec}` has too many `*` fields");
    }
    Ok((tensor, weight, rank))
}

/// Parses `a:b:step`.
pub fn parse_p_range(spec: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("--p-range must be `min:max:step`, got `{spec}`");
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|t| t.parse().map_err(|_| anyhow!("bad number `{t}` in p-range")))
        .collect::<Result<_>>()?;
    Ok((nums[0], nums[1], nums[2]))
}

/// Parses `a..b` or a single `q`.
pub fn parse_q_range(spec: &str) -> Result<(usize, usize)> {
    if let Some((a, b)) = spec.split_once("..") {
        let lo = a.parse().map_err(|_| anyhow!("bad q `{a}`"))?;
        let hi = b.parse().map_err(|_| anyhow!("bad q `{b}`"))?;
        if lo == 0 || hi < lo {
            bail!("q range must satisfy 1 <= lo <= hi, got `{spec}`");
        }
        Ok((lo, hi))
    } else {
        let q: usize = spec.parse().map_err(|_| anyhow!("bad q `{spec}`"))?;
        if q == 0 {
            bail!("q must be at least 1");
        }
        Ok((q, q))
    }
}

/// Parses `t1,t2,t3`.
pub fn parse_theta(spec: &str) -> Result<barriers_core::Theta> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        bail!("--theta must be `t1,t2,t3`, got `{spec}`");
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|t| t.parse().map_err(|_| anyhow!("bad number `{t}` in theta")))
        .collect::<Result<_>>()?;
    barriers_core::Theta::new(nums[0], nums[1], nums[2]).map_err(|e| anyhow!("{e}"))
}
