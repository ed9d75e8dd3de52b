//! Text format for representations.
//!
//! ```text
//! rep gen on subspace-2 over GF(32003) {
//!   dim u1 = 1; dim u2 = 1; dim s = 2;
//!   mat a1 = [[1],[0]];
//!   mat a2 = [[0],[1]];
//! }
//! ```
//!
//! Vertices without a `dim` line get dimension zero. A `mat` line may be
//! omitted exactly when one endpoint of its arrow has dimension zero.
//! Entries are integers or fractions `n/d`; over GF(p) a fraction means
//! multiplication by the inverse of `d` mod `p`. Matrices are lists of
//! rows. `#` starts a comment to the end of the line.
//!
//! Parsing is purely syntactic; [`RepFile::realize`] resolves names and
//! shapes against a concrete quiver and field.

use std::sync::Arc;

use crate::exactlin::{Field, FieldSpec, Matrix};
use crate::quiver::RootedTree;
use crate::rep::Rep;
use crate::textio::{Lexer, ParseError, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
struct DimDecl {
    vertex: String,
    value: usize,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct MatDecl {
    arrow: String,
    entries: Vec<Vec<(i64, i64)>>,
    line: usize,
    col: usize,
}

/// A parsed representation file, not yet resolved against a quiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepFile {
    name: String,
    quiver_name: String,
    field: FieldSpec,
    dims: Vec<DimDecl>,
    mats: Vec<MatDecl>,
}

impl RepFile {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn quiver_name(&self) -> &str {
        &self.quiver_name
    }

    pub fn field_spec(&self) -> &FieldSpec {
        &self.field
    }

    /// Resolves the declarations against a quiver and a field, producing
    /// the representation. Shape problems are reported at the declaration
    /// that caused them.
    pub fn realize<F: Field>(
        &self,
        tree: &Arc<RootedTree>,
        field: F,
    ) -> Result<Rep<F>, ParseError> {
        let q = tree.quiver();
        if self.quiver_name != q.name() {
            return Err(ParseError {
                line: 1,
                col: 1,
                msg: format!(
                    "rep is declared on quiver {:?} but was given {:?}",
                    self.quiver_name,
                    q.name()
                ),
            });
        }
        let mut dims = vec![0usize; q.n_vertices()];
        for d in &self.dims {
            let v = q.vertex_index(&d.vertex).ok_or_else(|| ParseError {
                line: d.line,
                col: d.col,
                msg: format!("unknown vertex {:?}", d.vertex),
            })?;
            dims[v] = d.value;
        }
        let mut mats: Vec<Option<Matrix<F>>> = vec![None; q.n_arrows()];
        for m in &self.mats {
            let a = q.arrow_index(&m.arrow).ok_or_else(|| ParseError {
                line: m.line,
                col: m.col,
                msg: format!("unknown arrow {:?}", m.arrow),
            })?;
            let arrow = q.arrow(a);
            let expected = (dims[arrow.head], dims[arrow.tail]);
            if expected.0 == 0 || expected.1 == 0 {
                if m.entries.iter().map(|r| r.len()).sum::<usize>() != 0 {
                    return Err(ParseError {
                        line: m.line,
                        col: m.col,
                        msg: format!(
                            "matrix for arrow {:?} must be empty ({}x{})",
                            m.arrow, expected.0, expected.1
                        ),
                    });
                }
                mats[a] = Some(Matrix::zeros(field.clone(), expected.0, expected.1));
                continue;
            }
            let got = (m.entries.len(), m.entries.first().map_or(0, |r| r.len()));
            if got != expected {
                return Err(ParseError {
                    line: m.line,
                    col: m.col,
                    msg: format!(
                        "matrix for arrow {:?} should be {}x{}, got {}x{}",
                        m.arrow, expected.0, expected.1, got.0, got.1
                    ),
                });
            }
            let mut mat = Matrix::zeros(field.clone(), expected.0, expected.1);
            for (i, row) in m.entries.iter().enumerate() {
                for (j, &(num, den)) in row.iter().enumerate() {
                    let e = field.from_ratio(num, den).ok_or_else(|| ParseError {
                        line: m.line,
                        col: m.col,
                        msg: format!(
                            "entry {num}/{den} has a zero denominator in this field"
                        ),
                    })?;
                    mat.set(i, j, e);
                }
            }
            mats[a] = Some(mat);
        }
        let mats = mats
            .into_iter()
            .enumerate()
            .map(|(a, m)| {
                let arrow = q.arrow(a);
                let shape = (dims[arrow.head], dims[arrow.tail]);
                match m {
                    Some(m) => Ok(m),
                    None if shape.0 == 0 || shape.1 == 0 => {
                        Ok(Matrix::zeros(field.clone(), shape.0, shape.1))
                    }
                    None => Err(ParseError {
                        line: 1,
                        col: 1,
                        msg: format!(
                            "arrow {:?} joins nonzero dimensions but has no matrix",
                            arrow.name
                        ),
                    }),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Rep::new(field, tree.clone(), dims, mats).map_err(|e| ParseError {
            line: 1,
            col: 1,
            msg: e.to_string(),
        })
    }
}

pub fn parse_rep(text: &str) -> Result<RepFile, ParseError> {
    let mut lex = Lexer::new(text)?;
    lex.expect_keyword("rep")?;
    let name = lex.expect_name()?;
    lex.expect_keyword("on")?;
    let quiver_name = lex.expect_name()?;
    lex.expect_keyword("over")?;
    let field = parse_field_spec(&mut lex)?;
    lex.expect(&Tok::LBrace)?;
    let mut dims: Vec<DimDecl> = Vec::new();
    let mut mats: Vec<MatDecl> = Vec::new();
    loop {
        match lex.peek().clone() {
            Tok::RBrace => break,
            Tok::Ident(kw) if kw == "dim" => {
                lex.next_tok();
                let (line, col) = lex.here();
                let vertex = lex.expect_name()?;
                lex.expect(&Tok::Equals)?;
                let (vline, vcol) = lex.here();
                let value = lex.expect_int()?;
                if value < 0 {
                    return Err(ParseError {
                        line: vline,
                        col: vcol,
                        msg: format!("dimension must be nonnegative, got {value}"),
                    });
                }
                lex.expect(&Tok::Semi)?;
                if dims.iter().any(|d| d.vertex == vertex) {
                    return Err(ParseError {
                        line,
                        col,
                        msg: format!("duplicate dim declaration for vertex {vertex:?}"),
                    });
                }
                dims.push(DimDecl {
                    vertex,
                    value: value as usize,
                    line,
                    col,
                });
            }
            Tok::Ident(kw) if kw == "mat" => {
                lex.next_tok();
                let (line, col) = lex.here();
                let arrow = lex.expect_name()?;
                lex.expect(&Tok::Equals)?;
                let entries = parse_matrix(&mut lex)?;
                lex.expect(&Tok::Semi)?;
                if mats.iter().any(|m| m.arrow == arrow) {
                    return Err(ParseError {
                        line,
                        col,
                        msg: format!("duplicate mat declaration for arrow {arrow:?}"),
                    });
                }
                mats.push(MatDecl {
                    arrow,
                    entries,
                    line,
                    col,
                });
            }
            other => {
                return Err(lex.error(format!(
                    "expected 'dim', 'mat', or '}}', found {}",
                    other.describe()
                )))
            }
        }
    }
    lex.expect(&Tok::RBrace)?;
    lex.expect_eof()?;
    Ok(RepFile {
        name,
        quiver_name,
        field,
        dims,
        mats,
    })
}

fn parse_field_spec(lex: &mut Lexer) -> Result<FieldSpec, ParseError> {
    let (line, col) = lex.here();
    match lex.peek().clone() {
        Tok::Ident(s) if s == "GF" => {
            lex.next_tok();
            lex.expect(&Tok::LParen)?;
            let (pline, pcol) = lex.here();
            let p = lex.expect_int()?;
            if p < 2 {
                return Err(ParseError {
                    line: pline,
                    col: pcol,
                    msg: format!("modulus must be at least 2, got {p}"),
                });
            }
            lex.expect(&Tok::RParen)?;
            Ok(FieldSpec::Gf(p as u64))
        }
        Tok::Ident(s) if s == "Q" => {
            lex.next_tok();
            Ok(FieldSpec::Rationals)
        }
        other => Err(ParseError {
            line,
            col,
            msg: format!("expected GF(<prime>) or Q, found {}", other.describe()),
        }),
    }
}

fn parse_matrix(lex: &mut Lexer) -> Result<Vec<Vec<(i64, i64)>>, ParseError> {
    lex.expect(&Tok::LBracket)?;
    let mut rows: Vec<Vec<(i64, i64)>> = Vec::new();
    if !matches!(lex.peek(), Tok::RBracket) {
        loop {
            let (rline, rcol) = lex.here();
            let row = parse_row(lex)?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(ParseError {
                        line: rline,
                        col: rcol,
                        msg: format!(
                            "row has {} entries but previous rows have {}",
                            row.len(),
                            first.len()
                        ),
                    });
                }
            }
            rows.push(row);
            if matches!(lex.peek(), Tok::Comma) {
                lex.next_tok();
            } else {
                break;
            }
        }
    }
    lex.expect(&Tok::RBracket)?;
    Ok(rows)
}

fn parse_row(lex: &mut Lexer) -> Result<Vec<(i64, i64)>, ParseError> {
    lex.expect(&Tok::LBracket)?;
    let mut row = Vec::new();
    if !matches!(lex.peek(), Tok::RBracket) {
        loop {
            let num = lex.expect_int()?;
            let den = if matches!(lex.peek(), Tok::Slash) {
                lex.next_tok();
                let (dline, dcol) = lex.here();
                let d = lex.expect_int()?;
                if d == 0 {
                    return Err(ParseError {
                        line: dline,
                        col: dcol,
                        msg: "zero denominator".into(),
                    });
                }
                d
            } else {
                1
            };
            row.push((num, den));
            if matches!(lex.peek(), Tok::Comma) {
                lex.next_tok();
            } else {
                break;
            }
        }
    }
    lex.expect(&Tok::RBracket)?;
    Ok(row)
}
