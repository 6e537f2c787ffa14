//! Per-figure aggregation of a results table: seed means per curve point.

use super::sweep::ResultRecord;
use crate::error::{Error, Result};
use crate::metrics::evm_pct_to_db;
use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// EVM against SNR, one curve per model, modulation, antennas and mode.
    EvmVsSnr,
    /// BLER (and BER) against SNR, same curves.
    BlerVsSnr,
    /// All metrics per phase noise model, pooled over antenna setups.
    PnCompare,
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evm_vs_snr" => Ok(Figure::EvmVsSnr),
            "bler_vs_snr" => Ok(Figure::BlerVsSnr),
            "pn_compare" => Ok(Figure::PnCompare),
            _ => Err(Error::Config(format!("unknown figure {s:?}"))),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::EvmVsSnr => "evm_vs_snr",
            Figure::BlerVsSnr => "bler_vs_snr",
            Figure::PnCompare => "pn_compare",
        })
    }
}

#[derive(Default)]
struct Group {
    key: Vec<String>,
    snr: String,
    evm: f64,
    ber: f64,
    bler: f64,
    n: usize,
}

fn snr_order(a: &str, b: &str) -> Ordering {
    // numbers first in numeric order, then "no-noise"
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// Write the figure's CSV. Failed rows are skipped.
pub fn write_plot_data<W: Write>(records: &[ResultRecord], figure: Figure, mut w: W) -> Result<()> {
    let key_of = |r: &ResultRecord| -> Vec<String> {
        match figure {
            Figure::EvmVsSnr | Figure::BlerVsSnr => vec![
                r.pn_model.clone(),
                r.modulation.clone(),
                r.n_tx.to_string(),
                r.n_rx.to_string(),
                r.cpe_comp.to_string(),
            ],
            Figure::PnCompare => vec![r.pn_model.clone(), r.modulation.clone(), r.cpe_comp.to_string()],
        }
    };
    let mut groups: Vec<Group> = Vec::new();
    for r in records {
        let (Some(evm), Some(ber), Some(bler)) = (r.evm_pct, r.ber, r.bler) else {
            continue;
        };
        let key = key_of(r);
        let g = match groups.iter_mut().position(|g| g.key == key && g.snr == r.snr_db) {
            Some(i) => &mut groups[i],
            None => {
                groups.push(Group {
                    key,
                    snr: r.snr_db.clone(),
                    ..Group::default()
                });
                groups.last_mut().expect("just pushed")
            }
        };
        g.evm += evm;
        g.ber += ber;
        g.bler += bler;
        g.n += 1;
    }
    groups.sort_by(|a, b| a.key.cmp(&b.key).then_with(|| snr_order(&a.snr, &b.snr)));

    let head = match figure {
        Figure::EvmVsSnr => "pn_model,modulation,n_tx,n_rx,cpe_comp,snr_db,evm_pct,evm_db,n_seeds",
        Figure::BlerVsSnr => "pn_model,modulation,n_tx,n_rx,cpe_comp,snr_db,bler,ber,n_seeds",
        Figure::PnCompare => "pn_model,modulation,cpe_comp,snr_db,evm_pct,evm_db,ber,bler,n_seeds",
    };
    writeln!(w, "{head}")?;
    for g in &groups {
        let n = g.n as f64;
        let evm = g.evm / n;
        let key = g.key.join(",");
        match figure {
            Figure::EvmVsSnr => writeln!(w, "{key},{},{evm},{},{}", g.snr, evm_pct_to_db(evm), g.n)?,
            Figure::BlerVsSnr => writeln!(w, "{key},{},{},{},{}", g.snr, g.bler / n, g.ber / n, g.n)?,
            Figure::PnCompare => writeln!(
                w,
                "{key},{},{evm},{},{},{},{}",
                g.snr,
                evm_pct_to_db(evm),
                g.ber / n,
                g.bler / n,
                g.n
            )?,
        }
    }
    Ok(())
}
