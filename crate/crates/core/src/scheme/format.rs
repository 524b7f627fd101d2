//! Plain-text scheme files.
//!
//! ```text
//! alttim-scheme 1
//! field 3
//! users 2
//! mode ic
//! state A 11 01
//! state B 10 11
//! state C 11 11
//! slots A B C
//! symbols 4
//! symbol 1 tx 1 rx 1
//! ...
//! encoder 1
//! 1 0 0 0
//! ...
//! ```
//!
//! Users, symbols and encoders are numbered from 1. Broadcast symbols use
//! `tx *`. Each `encoder t` header is followed by one row per slot with one
//! entry per symbol. `#` starts a comment.

use std::fmt::Write as _;

use super::{LinearScheme, MessageConfig, MessageMode, SchemeError, SparseEncoder, SymbolSpec};
use crate::field::Field;
use crate::topology::{StateAlphabet, StateSequence, TopologyState};

const MAGIC: &str = "alttim-scheme 1";

pub fn write_scheme(scheme: &LinearScheme) -> String {
    let mut out = String::new();
    let seq = scheme.sequence();
    let alphabet = seq.alphabet();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "field {}", scheme.field().modulus());
    let _ = writeln!(out, "users {}", scheme.users());
    let _ = writeln!(out, "mode {}", scheme.config().mode().as_str());
    for i in 0..alphabet.len() {
        let _ = writeln!(out, "state {} {}", alphabet.label(i), alphabet.state(i).grid_rows().join(" "));
    }
    let labels: Vec<&str> = (0..seq.len()).map(|s| seq.label(s)).collect();
    let _ = writeln!(out, "slots {}", labels.join(" "));
    let _ = writeln!(out, "symbols {}", scheme.symbol_count());
    for (j, s) in scheme.config().symbols().iter().enumerate() {
        let tx = s.source.map(|t| (t + 1).to_string()).unwrap_or_else(|| "*".into());
        let _ = writeln!(out, "symbol {} tx {} rx {}", j + 1, tx, s.dest + 1);
    }
    for t in 0..scheme.users() {
        let _ = writeln!(out, "encoder {}", t + 1);
        let e = scheme.encoder_matrix(t);
        for r in 0..e.rows() {
            let row: Vec<String> = e.row(r).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

struct Lines<'a> {
    items: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter_map(|(i, raw)| {
                let line = raw.split('#').next().unwrap_or("").trim();
                (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
            })
            .collect();
        Lines { items, pos: 0 }
    }

    fn last_line(&self) -> usize {
        self.items.last().map(|(l, _)| *l).unwrap_or(0)
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), SchemeError> {
        let item = self.items.get(self.pos).cloned().ok_or_else(|| SchemeError::Parse {
            line: self.last_line() + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })?;
        self.pos += 1;
        Ok(item)
    }

    fn peek_keyword(&self) -> Option<&'a str> {
        self.items.get(self.pos).and_then(|(_, w)| w.first().copied())
    }

    /// Consumes `keyword value` and returns `value`.
    fn keyed(&mut self, keyword: &str) -> Result<(usize, &'a str), SchemeError> {
        let (line, words) = self.next(keyword)?;
        match words.as_slice() {
            [k, v] if *k == keyword => Ok((line, v)),
            _ => Err(err(line, format!("expected '{keyword} <value>'"))),
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> SchemeError {
    SchemeError::Parse { line, msg: msg.into() }
}

fn number(line: usize, s: &str, what: &str) -> Result<usize, SchemeError> {
    s.parse::<usize>()
        .map_err(|_| err(line, format!("{what} '{s}' is not a nonnegative integer")))
}

pub fn parse_scheme(text: &str) -> Result<LinearScheme, SchemeError> {
    let mut lines = Lines::new(text);
    let (line, header) = lines.next("header")?;
    if header.join(" ") != MAGIC {
        return Err(err(line, format!("missing '{MAGIC}' header")));
    }
    let (line, p) = lines.keyed("field")?;
    let field = Field::new(number(line, p, "field modulus")? as u32).map_err(|e| err(line, e.to_string()))?;
    let (line, k) = lines.keyed("users")?;
    let users = number(line, k, "user count")?;
    if users == 0 {
        return Err(err(line, "user count must be positive"));
    }
    let (line, m) = lines.keyed("mode")?;
    let mode = MessageMode::parse(m).ok_or_else(|| err(line, format!("unknown mode '{m}' (ic, x, bc)")))?;

    let mut labels = Vec::new();
    let mut states = Vec::new();
    while lines.peek_keyword() == Some("state") {
        let (line, words) = lines.next("state")?;
        if words.len() != 2 + users {
            return Err(err(line, format!("state needs a label and {users} rows")));
        }
        let state = TopologyState::from_rows(&words[2..]).map_err(|e| err(line, e.to_string()))?;
        if labels.iter().any(|l| l == words[1]) {
            return Err(err(line, format!("duplicate state label '{}'", words[1])));
        }
        labels.push(words[1].to_string());
        states.push(state);
    }
    let alphabet = StateAlphabet::new(labels, states).map_err(|e| err(line, e.to_string()))?;

    let (line, words) = lines.next("slots")?;
    if words.first() != Some(&"slots") || words.len() < 2 {
        return Err(err(line, "expected 'slots <label> ...'"));
    }
    let slot_ids = words[1..]
        .iter()
        .map(|l| alphabet.position(l).ok_or_else(|| err(line, format!("unknown state label '{l}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    let seq = StateSequence::new(alphabet, slot_ids).map_err(|e| err(line, e.to_string()))?;
    let n = seq.len();

    let (line, count) = lines.keyed("symbols")?;
    let m = number(line, count, "symbol count")?;
    let mut symbols = Vec::with_capacity(m);
    let mut symbol_lines = Vec::with_capacity(m);
    for j in 0..m {
        let (line, words) = lines.next("symbol")?;
        let [kw, idx, tx_kw, tx, rx_kw, rx] = words.as_slice() else {
            return Err(err(line, "expected 'symbol <j> tx <t|*> rx <r>'"));
        };
        if *kw != "symbol" || *tx_kw != "tx" || *rx_kw != "rx" {
            return Err(err(line, "expected 'symbol <j> tx <t|*> rx <r>'"));
        }
        if number(line, idx, "symbol index")? != j + 1 {
            return Err(err(line, format!("symbols must be listed in order, expected {}", j + 1)));
        }
        let source = match *tx {
            "*" => None,
            t => Some(
                number(line, t, "transmitter")?
                    .checked_sub(1)
                    .ok_or_else(|| err(line, "transmitters are numbered from 1"))?,
            ),
        };
        let dest = number(line, rx, "receiver")?
            .checked_sub(1)
            .ok_or_else(|| err(line, "receivers are numbered from 1"))?;
        symbols.push(SymbolSpec { source, dest });
        symbol_lines.push(line);
    }
    let config = MessageConfig::new(mode, symbols, users).map_err(|e| match e {
        SchemeError::BadSymbol { symbol, msg } => err(symbol_lines[symbol], msg),
        other => err(line, other.to_string()),
    })?;

    let mut encoders: Vec<SparseEncoder> = Vec::with_capacity(users);
    for t in 0..users {
        let (line, idx) = lines.keyed("encoder")?;
        if number(line, idx, "encoder index")? != t + 1 {
            return Err(err(line, format!("expected encoder {}", t + 1)));
        }
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, words) = lines.next("encoder row")?;
            if words.len() != m {
                return Err(err(line, format!("encoder row has {} entries, expected {m}", words.len())));
            }
            let mut row = Vec::new();
            for (j, w) in words.iter().enumerate() {
                let v = number(line, w, "entry")?;
                if v >= field.modulus() as usize {
                    return Err(err(line, format!("entry {v} is not a residue mod {}", field.modulus())));
                }
                if v != 0 {
                    row.push((j, v as u32));
                }
            }
            rows.push(row);
        }
        encoders.push(rows);
    }
    if let Some((line, _)) = lines.items.get(lines.pos) {
        return Err(err(*line, "trailing content after the last encoder"));
    }
    let end = lines.last_line();
    LinearScheme::new(seq, field, config, encoders).map_err(|e| match e {
        SchemeError::SymbolNeverTransmitted { symbol } => err(
            symbol_lines[symbol],
            format!("symbol {} is never transmitted (all-zero column)", symbol + 1),
        ),
        other => err(end, other.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{build_bc2_joint_ab, build_ic2_joint_abc, build_schedule_x2};
    use crate::topology::StateFractions;

    #[test]
    fn builtin_schemes_roundtrip() {
        let f = Field::new(3).unwrap();
        for s in [build_ic2_joint_abc(f), build_bc2_joint_ab(f)] {
            let text = write_scheme(&s);
            assert_eq!(parse_scheme(&text).unwrap(), s);
        }
        let fr = StateFractions::parse("1/4,1/4,1/4,1/4", 4).unwrap();
        let x = build_schedule_x2(&fr, 8, Field::new(5).unwrap()).unwrap();
        assert_eq!(parse_scheme(&write_scheme(&x)).unwrap(), x);
    }

    #[test]
    fn fig2_text_layout() {
        let text = write_scheme(&build_ic2_joint_abc(Field::new(3).unwrap()));
        assert!(text.starts_with("alttim-scheme 1\nfield 3\nusers 2\nmode ic\nstate A 11 01\n"));
        assert!(text.contains("slots A B C\nsymbols 4\nsymbol 1 tx 1 rx 1\n"));
        assert!(text.contains("encoder 2\n0 0 1 0\n0 0 0 1\n0 0 1 0\n"));
    }

    #[test]
    fn zero_column_is_rejected_with_line() {
        let text = write_scheme(&build_ic2_joint_abc(Field::new(3).unwrap()));
        // silence symbol 4 (b2): it only appears in encoder 2, slot B
        let corrupted = text.replace("0 0 0 1\n", "0 0 0 0\n");
        let e = parse_scheme(&corrupted).unwrap_err();
        assert_eq!(
            e,
            SchemeError::Parse {
                line: 14,
                msg: "symbol 4 is never transmitted (all-zero column)".into()
            }
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let good = write_scheme(&build_bc2_joint_ab(Field::new(3).unwrap()));
        let cases = [
            (good.replace("field 3", "field 4"), 2),
            (good.replace("mode bc", "mode zz"), 4),
            (good.replace("slots A B", "slots A Q"), 9),
            (good.replace("symbol 2 tx * rx 2", "symbol 2 tx 1 rx 2"), 12),
            (good.replace("encoder 1\n1 0 0", "encoder 1\n1 0"), 15),
            (good.replace("encoder 1\n1 0 0", "encoder 1\n1 0 7"), 15),
            (format!("{good}1 1 1\n"), 20),
        ];
        for (text, line) in cases {
            match parse_scheme(&text) {
                Err(SchemeError::Parse { line: got, msg }) => assert_eq!(got, line, "{msg}"),
                other => panic!("expected parse error at line {line}, got {other:?}"),
            }
        }
        assert!(matches!(parse_scheme(""), Err(SchemeError::Parse { .. })));
    }
}
