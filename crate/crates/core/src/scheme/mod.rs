//! Linear coding schemes over a block of channel uses.
//!
//! A scheme maps a global vector of `M` message symbols onto `n` channel uses:
//! transmitter `t` sends `X_t(slot) = E_t[slot] · s`. Receiver `r` observes
//! `Y_r(slot) = Σ_t h_rt(slot) X_t(slot)`, i.e. `Y_r = M_r s` with the
//! effective matrix `M_r[slot][j] = Σ_t h_rt(slot) E_t[slot][j]`.
//!
//! Encoders are fixed before any coefficients are known; they depend on the
//! state sequence only.

mod builders;
mod format;

pub use builders::{
    build_bc2_joint_ab, build_ic2_joint_abc, build_ic3_candidate, build_schedule_bc2, build_schedule_ic2,
    build_schedule_x2, ic_scheme_from_columns, plan_bc2, plan_ic2, schedule_bc2_on, schedule_ic2_on, schedule_pair_on,
    schedule_x2_on, Bc2Plan, Ic2Plan,
};
pub use format::{parse_scheme, write_scheme};

use serde::Serialize;
use thiserror::Error;

use crate::field::{Field, FieldError, Matrix};
use crate::rational::RateValue;
use crate::topology::{ChannelRealization, StateSequence, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("expected {expected} encoders (one per transmitter), got {got}")]
    EncoderCount { expected: usize, got: usize },
    #[error("encoder {tx} has {got} rows, block length is {expected}")]
    EncoderRows { tx: usize, expected: usize, got: usize },
    #[error("encoder {tx}, slot {slot}: symbol index {symbol} out of range")]
    SymbolOutOfRange { tx: usize, slot: usize, symbol: usize },
    #[error("encoder {tx}, slot {slot}: coefficient {value} is not a nonzero residue")]
    BadCoefficient { tx: usize, slot: usize, value: u32 },
    #[error("symbol {symbol} is never transmitted")]
    SymbolNeverTransmitted { symbol: usize },
    #[error("symbol {symbol} originates at transmitter {owner} but transmitter {tx} sends it")]
    OwnershipViolated { symbol: usize, owner: usize, tx: usize },
    #[error("symbol {symbol}: {msg}")]
    BadSymbol { symbol: usize, msg: String },
    #[error("symbol vector has length {got}, scheme carries {expected} symbols")]
    SymbolCount { expected: usize, got: usize },
    #[error("malformed assignment: {0}")]
    Assignment(String),
    #[error("realization does not match the scheme's state sequence: {0}")]
    RealizationMismatch(TopologyError),
    #[error("realization field {got} differs from scheme field {expected}")]
    FieldMismatch { expected: Field, got: Field },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Which message structure a scheme serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageMode {
    /// Interference channel: transmitter k serves receiver k only.
    Ic,
    /// X channel: a message from every transmitter to every receiver.
    X,
    /// Vector broadcast: every symbol is available at every transmitter.
    Bc,
}

impl MessageMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageMode::Ic => "ic",
            MessageMode::X => "x",
            MessageMode::Bc => "bc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ic" => Some(MessageMode::Ic),
            "x" => Some(MessageMode::X),
            "bc" => Some(MessageMode::Bc),
            _ => None,
        }
    }
}

/// Origin and destination of one global symbol. `source` is `None` in
/// broadcast mode, where transmitters share all messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SymbolSpec {
    pub source: Option<usize>,
    pub dest: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MessageConfig {
    mode: MessageMode,
    symbols: Vec<SymbolSpec>,
}

impl MessageConfig {
    pub fn new(mode: MessageMode, symbols: Vec<SymbolSpec>, users: usize) -> Result<Self, SchemeError> {
        for (j, s) in symbols.iter().enumerate() {
            let bad = |msg: &str| SchemeError::BadSymbol {
                symbol: j,
                msg: msg.to_string(),
            };
            if s.dest >= users {
                return Err(bad("destination receiver out of range"));
            }
            match (mode, s.source) {
                (MessageMode::Bc, Some(_)) => return Err(bad("broadcast symbols have no single source")),
                (MessageMode::Bc, None) => {}
                (_, None) => return Err(bad("symbol needs a source transmitter")),
                (_, Some(t)) if t >= users => return Err(bad("source transmitter out of range")),
                (MessageMode::Ic, Some(t)) if t != s.dest => {
                    return Err(bad("interference-channel symbols go from transmitter k to receiver k"))
                }
                _ => {}
            }
        }
        Ok(MessageConfig { mode, symbols })
    }

    pub fn mode(&self) -> MessageMode {
        self.mode
    }

    pub fn symbols(&self) -> &[SymbolSpec] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbols desired by receiver `r`, increasing.
    pub fn desired(&self, r: usize) -> Vec<usize> {
        (0..self.symbols.len()).filter(|&j| self.symbols[j].dest == r).collect()
    }

    /// Symbols in the X-channel message group `W_rt`.
    pub fn group(&self, r: usize, t: usize) -> Vec<usize> {
        (0..self.symbols.len())
            .filter(|&j| self.symbols[j].dest == r && self.symbols[j].source == Some(t))
            .collect()
    }
}

/// One transmitter's encoder, stored sparsely: for each slot the nonzero
/// `(symbol, coefficient)` pairs in increasing symbol order.
pub type SparseEncoder = Vec<Vec<(usize, u32)>>;

/// A block-linear scheme: one encoder per transmitter plus the message map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearScheme {
    seq: StateSequence,
    field: Field,
    config: MessageConfig,
    encoders: Vec<SparseEncoder>,
}

/// A maximal set of slots and symbols coupled through the encoders. Receiver
/// matrices are block diagonal over components, so decoding splits along them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub slots: Vec<usize>,
    pub symbols: Vec<usize>,
}

impl LinearScheme {
    pub fn new(
        seq: StateSequence,
        field: Field,
        config: MessageConfig,
        mut encoders: Vec<SparseEncoder>,
    ) -> Result<Self, SchemeError> {
        let k = seq.users();
        let n = seq.len();
        let m = config.len();
        if encoders.len() != k {
            return Err(SchemeError::EncoderCount {
                expected: k,
                got: encoders.len(),
            });
        }
        let mut transmitted = vec![false; m];
        for (tx, enc) in encoders.iter_mut().enumerate() {
            if enc.len() != n {
                return Err(SchemeError::EncoderRows {
                    tx,
                    expected: n,
                    got: enc.len(),
                });
            }
            for (slot, row) in enc.iter_mut().enumerate() {
                row.sort_unstable_by_key(|&(j, _)| j);
                for &(j, c) in row.iter() {
                    if j >= m {
                        return Err(SchemeError::SymbolOutOfRange { tx, slot, symbol: j });
                    }
                    if c == 0 || c >= field.modulus() {
                        return Err(SchemeError::BadCoefficient { tx, slot, value: c });
                    }
                    if let Some(owner) = config.symbols[j].source {
                        if owner != tx {
                            return Err(SchemeError::OwnershipViolated { symbol: j, owner, tx });
                        }
                    }
                    transmitted[j] = true;
                }
                if row.windows(2).any(|w| w[0].0 == w[1].0) {
                    return Err(SchemeError::BadSymbol {
                        symbol: row[0].0,
                        msg: format!("listed twice in encoder {tx}, slot {slot}"),
                    });
                }
            }
        }
        if let Some(symbol) = transmitted.iter().position(|&b| !b) {
            return Err(SchemeError::SymbolNeverTransmitted { symbol });
        }
        Ok(LinearScheme {
            seq,
            field,
            config,
            encoders,
        })
    }

    /// Builds a scheme from dense `n x M` encoder matrices.
    pub fn from_dense(
        seq: StateSequence,
        field: Field,
        config: MessageConfig,
        encoders: &[Matrix],
    ) -> Result<Self, SchemeError> {
        let sparse = encoders
            .iter()
            .enumerate()
            .map(|(tx, e)| {
                if e.cols() != config.len() {
                    return Err(SchemeError::SymbolCount {
                        expected: config.len(),
                        got: e.cols(),
                    });
                }
                if e.rows() != seq.len() {
                    return Err(SchemeError::EncoderRows {
                        tx,
                        expected: seq.len(),
                        got: e.rows(),
                    });
                }
                Ok((0..e.rows())
                    .map(|r| {
                        e.row(r)
                            .iter()
                            .enumerate()
                            .filter(|(_, &v)| v != 0)
                            .map(|(j, &v)| (j, v))
                            .collect()
                    })
                    .collect())
            })
            .collect::<Result<Vec<SparseEncoder>, _>>()?;
        Self::new(seq, field, config, sparse)
    }

    pub fn sequence(&self) -> &StateSequence {
        &self.seq
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn config(&self) -> &MessageConfig {
        &self.config
    }

    pub fn users(&self) -> usize {
        self.seq.users()
    }

    pub fn slots(&self) -> usize {
        self.seq.len()
    }

    pub fn symbol_count(&self) -> usize {
        self.config.len()
    }

    pub fn encoder(&self, tx: usize) -> &SparseEncoder {
        &self.encoders[tx]
    }

    /// Dense `n x M` encoding matrix of transmitter `tx`.
    pub fn encoder_matrix(&self, tx: usize) -> Matrix {
        let mut m = Matrix::zeros(self.field, self.slots(), self.symbol_count());
        for (slot, row) in self.encoders[tx].iter().enumerate() {
            for &(j, c) in row {
                m.set(slot, j, c);
            }
        }
        m
    }

    /// Sum rate `M / n`.
    pub fn rate(&self) -> RateValue {
        RateValue::from_ratio(self.symbol_count() as i64, self.slots() as i64)
    }

    /// Returns a copy reinterpreted over another field; entries are reduced.
    pub fn with_field(&self, field: Field) -> Result<Self, SchemeError> {
        let encoders = self
            .encoders
            .iter()
            .map(|enc| {
                enc.iter()
                    .map(|row| {
                        row.iter()
                            .map(|&(j, c)| (j, c % field.modulus()))
                            .filter(|&(_, c)| c != 0)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self::new(self.seq.clone(), field, self.config.clone(), encoders)
    }

    /// Transmit values `X[slot][t]`.
    pub fn encode(&self, s: &[u32]) -> Result<Vec<Vec<u32>>, SchemeError> {
        self.check_symbols(s)?;
        let f = self.field;
        Ok((0..self.slots())
            .map(|slot| {
                self.encoders
                    .iter()
                    .map(|enc| {
                        enc[slot]
                            .iter()
                            .fold(0, |acc, &(j, c)| f.add(acc, f.mul(c, s[j] % f.modulus())))
                    })
                    .collect()
            })
            .collect())
    }

    /// Observations `Y[r][slot]` produced by the channel equation.
    pub fn receive(&self, real: &ChannelRealization, s: &[u32]) -> Result<Vec<Vec<u32>>, SchemeError> {
        self.check_realization(real)?;
        let x = self.encode(s)?;
        let f = self.field;
        let k = self.users();
        Ok((0..k)
            .map(|r| {
                (0..self.slots())
                    .map(|slot| (0..k).fold(0, |acc, t| f.add(acc, f.mul(real.coeff(slot, r, t), x[slot][t]))))
                    .collect()
            })
            .collect())
    }

    /// Effective `n x M` matrix of receiver `r`, with `Y_r = M_r s`.
    pub fn effective_matrix(&self, real: &ChannelRealization, r: usize) -> Result<Matrix, SchemeError> {
        self.check_realization(real)?;
        let mut m = Matrix::zeros(self.field, self.slots(), self.symbol_count());
        for slot in 0..self.slots() {
            for (j, v) in self.effective_row(real, r, slot) {
                m.set(slot, j, v);
            }
        }
        Ok(m)
    }

    /// Nonzero entries of row `slot` of `M_r`.
    pub(crate) fn effective_row(&self, real: &ChannelRealization, r: usize, slot: usize) -> Vec<(usize, u32)> {
        let f = self.field;
        let mut acc: Vec<(usize, u32)> = Vec::new();
        for (t, enc) in self.encoders.iter().enumerate() {
            let h = real.coeff(slot, r, t);
            if h == 0 {
                continue;
            }
            for &(j, c) in &enc[slot] {
                let v = f.mul(h, c);
                match acc.iter_mut().find(|(i, _)| *i == j) {
                    Some(e) => e.1 = f.add(e.1, v),
                    None => acc.push((j, v)),
                }
            }
        }
        acc.retain(|&(_, v)| v != 0);
        acc.sort_unstable_by_key(|&(j, _)| j);
        acc
    }

    /// Connected components of the slot/symbol incidence graph, ordered by
    /// their first slot. Slots that carry nothing are omitted.
    pub fn components(&self) -> Vec<Component> {
        let n = self.slots();
        let m = self.symbol_count();
        let mut parent: Vec<usize> = (0..n + m).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for enc in &self.encoders {
            for (slot, row) in enc.iter().enumerate() {
                for &(j, _) in row {
                    let a = find(&mut parent, slot);
                    let b = find(&mut parent, n + j);
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut by_root: std::collections::BTreeMap<usize, Component> = std::collections::BTreeMap::new();
        for v in 0..n + m {
            let root = find(&mut parent, v);
            let comp = by_root.entry(root).or_insert_with(|| Component {
                slots: Vec::new(),
                symbols: Vec::new(),
            });
            if v < n {
                comp.slots.push(v);
            } else {
                comp.symbols.push(v - n);
            }
        }
        by_root.into_values().filter(|c| !c.symbols.is_empty()).collect()
    }

    /// Local block of `M_r` restricted to one component.
    pub(crate) fn component_matrix(&self, real: &ChannelRealization, r: usize, comp: &Component) -> Matrix {
        let mut m = Matrix::zeros(self.field, comp.slots.len(), comp.symbols.len());
        for (i, &slot) in comp.slots.iter().enumerate() {
            for (j, v) in self.effective_row(real, r, slot) {
                let local = comp.symbols.binary_search(&j).expect("row stays inside its component");
                m.set(i, local, v);
            }
        }
        m
    }

    /// Receiver-side decoding: for each symbol desired by `r` (in increasing
    /// order), its value if the observation determines it uniquely.
    pub fn decode(&self, real: &ChannelRealization, r: usize, y: &[u32]) -> Result<Vec<(usize, Option<u32>)>, SchemeError> {
        self.check_realization(real)?;
        if y.len() != self.slots() {
            return Err(SchemeError::Field(FieldError::DimensionMismatch {
                expected: self.slots(),
                got: y.len(),
            }));
        }
        let desired = self.config.desired(r);
        let mut out: Vec<(usize, Option<u32>)> = desired.iter().map(|&j| (j, None)).collect();
        for comp in self.components() {
            let wanted: Vec<usize> = comp
                .symbols
                .iter()
                .enumerate()
                .filter(|(_, j)| self.config.symbols[**j].dest == r)
                .map(|(i, _)| i)
                .collect();
            if wanted.is_empty() {
                continue;
            }
            let m = self.component_matrix(real, r, &comp);
            let local_y: Vec<u32> = comp.slots.iter().map(|&s| y[s]).collect();
            let solved = m.solve_for(&local_y, &wanted)?;
            for (&i, v) in wanted.iter().zip(solved) {
                let j = comp.symbols[i];
                let pos = desired.binary_search(&j).expect("wanted symbols are desired");
                out[pos].1 = v.map(|e| e.value());
            }
        }
        Ok(out)
    }

    pub(crate) fn check_realization(&self, real: &ChannelRealization) -> Result<(), SchemeError> {
        if real.field() != self.field {
            return Err(SchemeError::FieldMismatch {
                expected: self.field,
                got: real.field(),
            });
        }
        real.check_against(&self.seq).map_err(SchemeError::RealizationMismatch)
    }

    fn check_symbols(&self, s: &[u32]) -> Result<(), SchemeError> {
        if s.len() != self.symbol_count() {
            return Err(SchemeError::SymbolCount {
                expected: self.symbol_count(),
                got: s.len(),
            });
        }
        Ok(())
    }
}
