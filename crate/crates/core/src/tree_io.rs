//! Line-oriented tree export. Floats are written in shortest round-trip
//! form, so `read_tree(write_tree(t)) == t` bit for bit.
//!
//! ```text
//! # alm scenario tree
//! branching 2 2
//! seed 7
//! kappa 0.5
//! id parent time cond_prob wage_growth xi_1 xi_2 ... L W Ben
//! 0 - 0 1 0 1 1 ... 120000 60000 6000
//! ```

use std::io::{BufRead, Write};

use crate::tree::{EconomicState, ScenarioTree, TreeError, TreeNode};

pub fn write_tree<W: Write>(tree: &ScenarioTree, out: &mut W) -> Result<(), TreeError> {
    writeln!(out, "# alm scenario tree")?;
    let b: Vec<String> = tree.branching.iter().map(|b| b.to_string()).collect();
    writeln!(out, "branching {}", b.join(" "))?;
    writeln!(out, "seed {}", tree.seed)?;
    writeln!(out, "kappa {}", tree.kappa)?;
    let xi: Vec<String> = (1..=tree.num_assets()).map(|k| format!("xi_{k}")).collect();
    writeln!(out, "id parent time cond_prob wage_growth {} L W Ben", xi.join(" "))?;
    for n in &tree.nodes {
        let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
        write!(out, "{} {} {} {} {}", n.id, parent, n.time, n.cond_prob, n.state.wage_growth)?;
        for r in &n.state.gross_returns {
            write!(out, " {r}")?;
        }
        writeln!(out, " {} {} {}", n.state.liability, n.state.wages, n.state.benefits)?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> TreeError {
    TreeError::Parse {
        line,
        msg: msg.into(),
    }
}

fn header_value(line: Option<(usize, String)>, key: &str) -> Result<(usize, String), TreeError> {
    let (no, text) = line.ok_or_else(|| parse_err(0, format!("missing {key} line")))?;
    let rest = text
        .strip_prefix(key)
        .ok_or_else(|| parse_err(no, format!("expected {key}")))?;
    Ok((no, rest.trim().to_string()))
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, TreeError> {
    s.parse().map_err(|_| parse_err(line, format!("bad number {s:?}")))
}

pub fn read_tree<R: BufRead>(input: R) -> Result<ScenarioTree, TreeError> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .filter(|r| !matches!(r, Ok((_, l)) if l.starts_with('#') || l.trim().is_empty()));
    let mut next = || lines.next().transpose();

    let (no, b) = header_value(next()?, "branching")?;
    let branching = b
        .split_whitespace()
        .map(|s| num::<usize>(no, s))
        .collect::<Result<Vec<_>, _>>()?;
    let (no, s) = header_value(next()?, "seed")?;
    let seed = num(no, &s)?;
    let (no, k) = header_value(next()?, "kappa")?;
    let kappa = num(no, &k)?;
    let (no, cols) = next()?.ok_or_else(|| parse_err(0, "missing column header"))?;
    let ncols = cols.split_whitespace().count();
    if ncols < 8 {
        return Err(parse_err(no, "column header too short"));
    }
    let d = ncols - 8;

    let mut nodes: Vec<TreeNode> = Vec::new();
    while let Some((no, line)) = next()? {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != ncols {
            return Err(parse_err(no, format!("expected {ncols} fields, got {}", f.len())));
        }
        let id: usize = num(no, f[0])?;
        if id != nodes.len() {
            return Err(parse_err(no, "node ids must be consecutive"));
        }
        let parent = if f[1] == "-" { None } else { Some(num::<usize>(no, f[1])?) };
        let cond_prob: f64 = num(no, f[3])?;
        let path_prob = match parent {
            None => cond_prob,
            Some(p) => {
                let pn = nodes
                    .get_mut(p)
                    .ok_or_else(|| parse_err(no, "parent must precede child"))?;
                pn.children.push(id);
                pn.path_prob * cond_prob
            }
        };
        let vals = f[4..]
            .iter()
            .map(|s| num::<f64>(no, s))
            .collect::<Result<Vec<_>, _>>()?;
        nodes.push(TreeNode {
            id,
            time: num(no, f[2])?,
            parent,
            cond_prob,
            path_prob,
            children: Vec::new(),
            state: EconomicState {
                wage_growth: vals[0],
                gross_returns: vals[1..1 + d].to_vec(),
                liability: vals[1 + d],
                wages: vals[2 + d],
                benefits: vals[3 + d],
            },
        });
    }
    if nodes.is_empty() {
        return Err(parse_err(0, "no nodes"));
    }
    Ok(ScenarioTree {
        branching,
        seed,
        kappa,
        nodes,
    })
}
