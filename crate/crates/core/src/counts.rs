//! Outcome tallies per setting pair and their CSV form.
//!
//! CSV schema (header mandatory):
//!
//! ```text
//! pair_label,r,q,count
//! a-b,+1,+1,4113
//! a-b,+1,0,1032
//! ...
//! ```
//!
//! `pair_label` is one of `a-b`, `a-b'`, `a'-b`, `a'-b'`; `r` and `q` are
//! `+1`, `-1` or `0` (no detection). A file may omit every row involving a
//! non-detection; the emitted-pair total is then unknown. When the `0,0` row
//! is present the table is taken as complete and its sum is the number of
//! emitted pairs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::{Angle, Outcome};
use crate::quad::PairSlot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub pair: PairSlot,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub settings: Option<(Angle, Angle)>,
    /// `n[r][q]` indexed by [`Outcome::index`].
    pub n: [[u64; 3]; 3],
    /// Whether rows involving a non-detection were observed.
    pub nondetections_recorded: bool,
    pub emitted_total: Option<u64>,
}

impl CountsRecord {
    /// Record with a complete table when `emitted_total` is given.
    pub fn new(
        pair: PairSlot,
        settings: Option<(Angle, Angle)>,
        n: [[u64; 3]; 3],
        emitted_total: Option<u64>,
    ) -> Result<Self> {
        let rec = Self {
            pair,
            settings,
            n,
            nondetections_recorded: emitted_total.is_some(),
            emitted_total,
        };
        if let Some(total) = emitted_total {
            if rec.table_total() != total {
                return Err(Error::Counts(format!(
                    "pair {pair}: table sums to {} but {total} pairs were emitted",
                    rec.table_total()
                )));
            }
        }
        Ok(rec)
    }

    /// Coincidences only (`n_{±±}`); non-detection cells are zero and unknown.
    pub fn coincidences_only(pair: PairSlot, detected: [[u64; 2]; 2]) -> Self {
        let mut n = [[0u64; 3]; 3];
        for i in 0..2 {
            for j in 0..2 {
                n[i][j] = detected[i][j];
            }
        }
        Self {
            pair,
            settings: None,
            n,
            nondetections_recorded: false,
            emitted_total: None,
        }
    }

    /// Attaches an externally known number of emitted pairs.
    pub fn with_emitted_total(mut self, total: u64) -> Result<Self> {
        let known = if self.nondetections_recorded {
            self.table_total()
        } else {
            self.coincidences()
        };
        if self.nondetections_recorded && known != total || known > total {
            return Err(Error::Counts(format!(
                "pair {}: {known} recorded outcomes inconsistent with {total} emitted pairs",
                self.pair
            )));
        }
        self.emitted_total = Some(total);
        Ok(self)
    }

    pub fn get(&self, r: Outcome, q: Outcome) -> u64 {
        self.n[r.index()][q.index()]
    }

    pub fn table_total(&self) -> u64 {
        self.n.iter().flatten().sum()
    }

    /// `Σ_{r,q=±1} N_rq`.
    pub fn coincidences(&self) -> u64 {
        self.n[0][0] + self.n[0][1] + self.n[1][0] + self.n[1][1]
    }

    /// `Σ_{r,q=±1} rq N_rq`, as a signed count.
    pub fn signed_coincidences(&self) -> i128 {
        i128::from(self.n[0][0]) + i128::from(self.n[1][1])
            - i128::from(self.n[0][1])
            - i128::from(self.n[1][0])
    }
}

fn outcome_label(o: Outcome) -> &'static str {
    match o {
        Outcome::Plus => "+1",
        Outcome::Minus => "-1",
        Outcome::NoDetect => "0",
    }
}

fn parse_outcome(s: &str) -> Result<Outcome> {
    let v: i32 = s
        .trim()
        .trim_start_matches('+')
        .parse()
        .map_err(|_| Error::Counts(format!("bad outcome {s:?}")))?;
    Outcome::from_value(v).map_err(|e| Error::Counts(e.to_string()))
}

/// Writes records in slot order. Complete tables get all nine rows.
pub fn write_csv<W: Write>(records: &[CountsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Counts(e.to_string());
    w.write_record(["pair_label", "r", "q", "count"]).map_err(io)?;
    for rec in records {
        let outcomes: &[Outcome] = if rec.nondetections_recorded {
            &Outcome::ALL
        } else {
            &Outcome::DETECTED
        };
        for &r in outcomes {
            for &q in outcomes {
                w.write_record([
                    rec.pair.label(),
                    outcome_label(r),
                    outcome_label(q),
                    &rec.get(r, q).to_string(),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Counts(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct Row {
    pair_label: String,
    r: String,
    q: String,
    count: u64,
}

/// Reads the four records in slot order.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<CountsRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Counts(e.to_string()))?
        .clone();
    let expected = ["pair_label", "r", "q", "count"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Counts(format!(
            "header must be {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut tables = [[[0u64; 3]; 3]; 4];
    let mut seen = [[[false; 3]; 3]; 4];
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Counts(format!("row {}: {e}", line + 2)))?;
        let slot: PairSlot = row.pair_label.parse()?;
        let (r, q) = (parse_outcome(&row.r)?, parse_outcome(&row.q)?);
        let cell = &mut seen[slot.index()][r.index()][q.index()];
        if *cell {
            return Err(Error::Counts(format!(
                "duplicate row {slot},{},{}",
                outcome_label(r),
                outcome_label(q)
            )));
        }
        *cell = true;
        tables[slot.index()][r.index()][q.index()] = row.count;
    }

    PairSlot::ALL
        .iter()
        .map(|&slot| {
            let s = &seen[slot.index()];
            if !s.iter().flatten().any(|&x| x) {
                return Err(Error::Counts(format!("no rows for pair {slot}")));
            }
            let complete = s.iter().flatten().all(|&x| x);
            let n = tables[slot.index()];
            if complete {
                let total: u64 = n.iter().flatten().sum();
                CountsRecord::new(slot, None, n, Some(total))
            } else if s[2][2] {
                Err(Error::Counts(format!(
                    "pair {slot}: non-detection rows are partially missing"
                )))
            } else {
                Ok(CountsRecord::coincidences_only(
                    slot,
                    [[n[0][0], n[0][1]], [n[1][0], n[1][1]]],
                ))
            }
        })
        .collect()
}
