//! Text format and DOT export for quivers.
//!
//! ```text
//! quiver subspace-2 {
//!   vertices: u1 u2 s;
//!   arrows:
//!     a1: u1 -> s;
//!     a2: u2 -> s;
//! }
//! ```
//!
//! `#` starts a comment running to the end of the line. Parsing checks
//! names only; rooted tree shape is validated separately by
//! [`RootedTree::new`](super::RootedTree::new).

use super::Quiver;
use crate::textio::{Lexer, ParseError, Tok};

pub fn parse_quiver(text: &str) -> Result<Quiver, ParseError> {
    let mut lex = Lexer::new(text)?;
    lex.expect_keyword("quiver")?;
    let name = lex.expect_name()?;
    let mut q = Quiver::new(name);
    lex.expect(&Tok::LBrace)?;
    lex.expect_keyword("vertices")?;
    lex.expect(&Tok::Colon)?;
    while !matches!(lex.peek(), Tok::Semi) {
        let (line, col) = lex.here();
        let v = lex.expect_name()?;
        q.add_vertex(&v).map_err(|e| ParseError {
            line,
            col,
            msg: e.to_string(),
        })?;
    }
    lex.expect(&Tok::Semi)?;
    lex.expect_keyword("arrows")?;
    lex.expect(&Tok::Colon)?;
    while !matches!(lex.peek(), Tok::RBrace) {
        let (aline, acol) = lex.here();
        let a = lex.expect_name()?;
        lex.expect(&Tok::Colon)?;
        let (tline, tcol) = lex.here();
        let tail = lex.expect_name()?;
        lex.expect(&Tok::Arrow)?;
        let (hline, hcol) = lex.here();
        let head = lex.expect_name()?;
        lex.expect(&Tok::Semi)?;
        q.add_arrow(&a, &tail, &head).map_err(|e| {
            let (line, col) = match &e {
                super::QuiverError::UnknownVertex { vertex, .. } if *vertex == tail => {
                    (tline, tcol)
                }
                super::QuiverError::UnknownVertex { .. } => (hline, hcol),
                _ => (aline, acol),
            };
            ParseError {
                line,
                col,
                msg: e.to_string(),
            }
        })?;
    }
    lex.expect(&Tok::RBrace)?;
    lex.expect_eof()?;
    Ok(q)
}

/// Canonical text form; `parse_quiver(format_quiver(q)) == q`.
pub fn format_quiver(q: &Quiver) -> String {
    let mut s = format!("quiver {} {{\n  vertices:", q.name());
    for v in q.vertex_names() {
        s.push(' ');
        s.push_str(v);
    }
    s.push_str(";\n  arrows:\n");
    for a in q.arrows() {
        s.push_str(&format!(
            "    {}: {} -> {};\n",
            a.name,
            q.vertex_name(a.tail),
            q.vertex_name(a.head)
        ));
    }
    s.push_str("}\n");
    s
}

/// Graphviz rendering with arrow names as edge labels.
pub fn quiver_dot(q: &Quiver) -> String {
    let mut s = format!("digraph \"{}\" {{\n  rankdir=TB;\n", q.name());
    for v in q.vertex_names() {
        s.push_str(&format!("  \"{v}\";\n"));
    }
    for a in q.arrows() {
        s.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
            q.vertex_name(a.tail),
            q.vertex_name(a.head),
            a.name
        ));
    }
    s.push_str("}\n");
    s
}
