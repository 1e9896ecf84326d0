use std::path::Path;

use serde::{Deserialize, Serialize};

use smabp::abp::AbpJson;
use smabp::fullrank::FullRankJson;
use smabp::poly::PolyJson;
use smabp::{Abp, Error, MultilinearPoly, OrderList, Permutation};

use crate::Failure;

/// A program, optionally with the orders it was generated for.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProgramFile {
    WithOrders { abp: AbpJson, orders: Vec<Vec<usize>> },
    Plain(AbpJson),
}

/// Anything `rank` can take a polynomial from.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PolySource {
    FullRank(FullRankJson),
    Poly(PolyJson),
    Program(ProgramFile),
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())).into())
}

pub fn read_program(path: &Path) -> Result<(Abp, Option<OrderList>), Failure> {
    match parse::<ProgramFile>(path)? {
        ProgramFile::Plain(j) => Ok((Abp::from_json(&j)?, None)),
        ProgramFile::WithOrders { abp, orders } => Ok((Abp::from_json(&abp)?, Some(OrderList::from_seqs(orders)?))),
    }
}

pub fn read_poly(path: &Path) -> Result<MultilinearPoly, Failure> {
    Ok(match parse::<PolySource>(path)? {
        PolySource::FullRank(j) => MultilinearPoly::from_json(&j.polynomial)?,
        PolySource::Poly(j) => MultilinearPoly::from_json(&j)?,
        PolySource::Program(ProgramFile::Plain(j) | ProgramFile::WithOrders { abp: j, .. }) => {
            Abp::from_json(&j)?.poly()?
        }
    })
}

/// `"1,2,3"` as a sequence of variable indices.
pub fn parse_seq(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad index {t:?}: {e}")).into()))
        .collect()
}

pub fn parse_perm(s: &str) -> Result<Permutation, Failure> {
    Ok(Permutation::new(parse_seq(s)?)?)
}

/// `"1,2;2,1"` as an order list.
pub fn parse_orders(s: &str) -> Result<OrderList, Failure> {
    let seqs = s.split(';').map(parse_seq).collect::<Result<Vec<_>, _>>()?;
    Ok(OrderList::from_seqs(seqs)?)
}

pub fn write_output(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
