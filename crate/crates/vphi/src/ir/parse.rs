//! Line-oriented parser for the textual IR.

use std::collections::HashMap;

use thiserror::Error;

use super::{Block, BlockId, Operand, Program, Rhs, Statement, StmtId};

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Name(String),
    Int(i64),
    Punct(char),
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Name(n) => format!("name `{n}`"),
            Token::Int(i) => format!("integer `{i}`"),
            Token::Punct(c) => format!("`{c}`"),
        }
    }
}

/// Tokenizes one line. Returns `(token, 1-based column)` pairs.
fn tokenize(line_no: usize, line: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let col = i + 1;
        if c == '#' {
            break;
        } else if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut name = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    name.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((Token::Name(name), col));
        } else if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            let value: i64 = digits
                .parse()
                .map_err(|_| ParseError::new(line_no, col, "integer literal out of range"))?;
            out.push((Token::Int(value), col));
        } else if c.is_ascii_punctuation() {
            chars.next();
            out.push((Token::Punct(c), col));
        } else {
            return Err(ParseError::new(line_no, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct RawBlock {
    name: String,
    line: usize,
    pred_names: Vec<(String, usize, usize)>,
    stmts: Vec<Statement>,
}

/// Parses a whole program.
///
/// Accepted violations such as more than two predecessors are left for
/// [`super::validate_ssa`]; only malformed syntax, duplicate block names,
/// unknown predecessor names, and missing `entry`/`exit` blocks are
/// rejected here.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut raw: Vec<RawBlock> = Vec::new();
    let mut next_stmt = 0u32;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = tokenize(line_no, line)?;
        if tokens.is_empty() {
            continue;
        }
        match &tokens[0].0 {
            Token::Name(kw) if kw == "block" => {
                let name = match tokens.get(1) {
                    Some((Token::Name(n), _)) => n.clone(),
                    Some((t, col)) => {
                        return Err(ParseError::new(
                            line_no,
                            *col,
                            format!("expected block name, found {}", t.describe()),
                        ))
                    }
                    None => {
                        return Err(ParseError::new(line_no, line.len() + 1, "expected block name"))
                    }
                };
                match tokens.get(2) {
                    Some((Token::Punct(':'), _)) => {}
                    Some((t, col)) => {
                        return Err(ParseError::new(
                            line_no,
                            *col,
                            format!("expected `:` after block name, found {}", t.describe()),
                        ))
                    }
                    None => {
                        return Err(ParseError::new(
                            line_no,
                            line.len() + 1,
                            "expected `:` after block name",
                        ))
                    }
                }
                if let Some((t, col)) = tokens.get(3) {
                    return Err(ParseError::new(
                        line_no,
                        *col,
                        format!("unexpected {} after block header", t.describe()),
                    ));
                }
                if raw.iter().any(|b| b.name == name) {
                    return Err(ParseError::new(
                        line_no,
                        tokens[1].1,
                        format!("duplicate block name `{name}`"),
                    ));
                }
                raw.push(RawBlock { name, line: line_no, pred_names: Vec::new(), stmts: Vec::new() });
            }
            Token::Name(kw) if kw == "preds" && matches!(tokens.get(1), Some((Token::Punct(':'), _))) => {
                let block = raw.last_mut().ok_or_else(|| {
                    ParseError::new(line_no, tokens[0].1, "`preds:` before any block header")
                })?;
                if !block.pred_names.is_empty() || !block.stmts.is_empty() {
                    return Err(ParseError::new(
                        line_no,
                        tokens[0].1,
                        "`preds:` must be the first line of a block and appear once",
                    ));
                }
                let mut rest = tokens[2..].iter().peekable();
                loop {
                    match rest.next() {
                        Some((Token::Name(n), col)) => {
                            block.pred_names.push((n.clone(), line_no, *col))
                        }
                        Some((t, col)) => {
                            return Err(ParseError::new(
                                line_no,
                                *col,
                                format!("expected predecessor name, found {}", t.describe()),
                            ))
                        }
                        None => {
                            return Err(ParseError::new(
                                line_no,
                                line.len() + 1,
                                "expected predecessor name",
                            ))
                        }
                    }
                    match rest.next() {
                        Some((Token::Punct(','), _)) => continue,
                        Some((t, col)) => {
                            return Err(ParseError::new(
                                line_no,
                                *col,
                                format!("expected `,` between predecessors, found {}", t.describe()),
                            ))
                        }
                        None => break,
                    }
                }
            }
            _ => {
                let block = raw.last_mut().ok_or_else(|| {
                    ParseError::new(line_no, tokens[0].1, "statement before any block header")
                })?;
                let stmt = parse_stmt(line_no, line, &tokens, StmtId(next_stmt))?;
                next_stmt += 1;
                block.stmts.push(stmt);
            }
        }
    }

    let ids: HashMap<String, BlockId> = raw
        .iter()
        .enumerate()
        .map(|(i, b)| (b.name.clone(), BlockId(i as u32)))
        .collect();
    let entry = *ids.get("entry").ok_or_else(|| {
        ParseError::new(1, 1, "program has no `entry` block")
    })?;
    let exit = *ids.get("exit").ok_or_else(|| {
        ParseError::new(raw.last().map_or(1, |b| b.line), 1, "program has no `exit` block")
    })?;

    let mut blocks = Vec::with_capacity(raw.len());
    for (i, b) in raw.into_iter().enumerate() {
        let mut preds = Vec::with_capacity(b.pred_names.len());
        for (name, line, col) in &b.pred_names {
            let id = ids.get(name).ok_or_else(|| {
                ParseError::new(*line, *col, format!("unknown block `{name}` in preds"))
            })?;
            preds.push(*id);
        }
        blocks.push(Block { id: BlockId(i as u32), name: b.name, preds, stmts: b.stmts });
    }
    Ok(Program::new(blocks, entry, exit, next_stmt))
}

fn parse_stmt(
    line_no: usize,
    line: &str,
    tokens: &[(Token, usize)],
    id: StmtId,
) -> Result<Statement, ParseError> {
    let end_col = line.len() + 1;
    let target = match &tokens[0] {
        (Token::Name(n), _) => n.clone(),
        (t, col) => {
            return Err(ParseError::new(
                line_no,
                *col,
                format!("expected statement target, found {}", t.describe()),
            ))
        }
    };
    match tokens.get(1) {
        Some((Token::Punct('='), _)) => {}
        Some((t, col)) => {
            return Err(ParseError::new(
                line_no,
                *col,
                format!("expected `=`, found {}", t.describe()),
            ))
        }
        None => return Err(ParseError::new(line_no, end_col, "expected `=` after target")),
    }
    let rest = &tokens[2..];
    let rhs = match rest {
        [] => return Err(ParseError::new(line_no, end_col, "expected right-hand side")),
        [(Token::Int(c), _)] => Rhs::Const(*c),
        [(Token::Name(v), _)] => Rhs::Var(v.clone()),
        // phi(a, b)
        [(Token::Name(kw), _), (Token::Punct('('), _), rest @ ..] if kw == "phi" => match rest {
            [(Token::Name(l), _), (Token::Punct(','), _), (Token::Name(r), _), (Token::Punct(')'), _)] => {
                Rhs::Phi { left: l.clone(), right: r.clone() }
            }
            _ => {
                return Err(ParseError::new(
                    line_no,
                    tokens[2].1,
                    "malformed phi, expected `phi(a, b)` with variable operands",
                ))
            }
        },
        // atom op atom
        [l, (Token::Punct(op), opcol), r] => {
            let left = atom(line_no, l)?;
            let right = atom(line_no, r)?;
            if *op == '=' || *op == '(' || *op == ')' || *op == ',' || *op == '#' {
                return Err(ParseError::new(line_no, *opcol, format!("`{op}` is not an operator")));
            }
            Rhs::BinOp { op: *op, left, right }
        }
        _ => {
            return Err(ParseError::new(
                line_no,
                rest[0].1,
                "malformed right-hand side, expected INT, NAME, `atom OP atom`, or `phi(a, b)`",
            ))
        }
    };
    Ok(Statement { id, target, rhs, phi_copy: false })
}

fn atom(line_no: usize, tok: &(Token, usize)) -> Result<Operand, ParseError> {
    match tok {
        (Token::Name(n), _) => Ok(Operand::Var(n.clone())),
        (Token::Int(c), _) => Ok(Operand::Const(*c)),
        (t, col) => Err(ParseError::new(
            line_no,
            *col,
            format!("expected variable or integer, found {}", t.describe()),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::DIAMOND;

    #[test]
    fn parses_diamond_shape() {
        let p = parse_program(DIAMOND).unwrap();
        assert_eq!(p.blocks.len(), 5);
        let b3 = p.block_by_name("B3").unwrap();
        let names: Vec<&str> = b3.preds.iter().map(|&b| p.block(b).name.as_str()).collect();
        assert_eq!(names, ["B1", "B2"]);
        assert_eq!(b3.stmts.len(), 3);
        assert!(matches!(b3.stmts[0].rhs, Rhs::Phi { .. }));
        assert_eq!(b3.stmts[2].to_string(), "w3 = x3 + y3");
    }

    #[test]
    fn statement_ids_are_assigned_in_source_order() {
        let p = parse_program(DIAMOND).unwrap();
        let ids: Vec<u32> = p.statements().map(|(_, s)| s.id.0).collect();
        assert_eq!(ids, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn unknown_pred_is_an_error_with_position() {
        let src = "block entry:\nblock B1:\n  preds: nosuch\nblock exit:\n  preds: B1\n";
        let err = parse_program(src).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("nosuch"), "{err}");
    }

    #[test]
    fn duplicate_block_name_is_an_error() {
        let src = "block entry:\nblock B1:\n  preds: entry\nblock B1:\n  preds: entry\nblock exit:\n  preds: B1\n";
        let err = parse_program(src).unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.message.contains("duplicate"), "{err}");
    }

    #[test]
    fn missing_boundary_blocks_are_errors() {
        assert!(parse_program("block exit:\n").unwrap_err().message.contains("entry"));
        assert!(parse_program("block entry:\n").unwrap_err().message.contains("exit"));
    }

    #[test]
    fn phi_in_single_pred_block_parses_but_is_left_to_validation() {
        let src = "block entry:\nblock B1:\n  preds: entry\n  x1 = phi(a1, b1)\nblock exit:\n  preds: B1\n";
        let p = parse_program(src).unwrap();
        let b1 = p.block_by_name("B1").unwrap();
        assert!(matches!(b1.stmts[0].rhs, Rhs::Phi { .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let src = "# header\nblock entry:\n\nblock exit: # trailing\n  preds: entry\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.blocks.len(), 2);
    }

    #[test]
    fn operators_are_single_punctuation_chars() {
        let src = "block entry:\nblock B1:\n  preds: entry\n  x = a % b\n  y = a / b\nblock exit:\n  preds: B1\n";
        let p = parse_program(src).unwrap();
        let b1 = p.block_by_name("B1").unwrap();
        assert!(matches!(b1.stmts[0].rhs, Rhs::BinOp { op: '%', .. }));
        assert!(matches!(b1.stmts[1].rhs, Rhs::BinOp { op: '/', .. }));
    }

    #[test]
    fn garbage_reports_line_and_column() {
        let src = "block entry:\nblock B1:\n  preds: entry\n  x = + +\nblock exit:\n  preds: B1\n";
        let err = parse_program(src).unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.col > 1);
    }
}
