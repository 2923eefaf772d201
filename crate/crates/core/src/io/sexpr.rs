use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    Atom(String, (usize, usize)),
    List(Vec<SExpr>, (usize, usize)),
}

impl SExpr {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(v, _) => Some(v),
            SExpr::Atom(..) => None,
        }
    }

    /// Lower-cased head atom of a list.
    pub fn head(&self) -> Option<String> {
        self.as_list()?.first()?.as_atom().map(str::to_ascii_lowercase)
    }
}

impl std::fmt::Display for SExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SExpr::Atom(s, _) => f.write_str(s),
            SExpr::List(v, _) => {
                f.write_str("(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

type RawToken = (char, String, (usize, usize));

fn flush(cur: &mut String, pos: (usize, usize), toks: &mut Vec<RawToken>) {
    if !cur.is_empty() {
        toks.push(('a', std::mem::take(cur), pos));
    }
}

/// Reads every top-level expression. `;` starts a comment; `?` always starts a new
/// atom, and a lone `:` is glued to the following atom.
pub fn parse_sexprs(text: &str, file: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut toks: Vec<RawToken> = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut cur = String::new();
    let mut cur_pos = (0, 0);
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        let here = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
        match c {
            ';' => {
                flush(&mut cur, cur_pos, &mut toks);
                while let Some(&d) = chars.peek() {
                    if d == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' | ')' => {
                flush(&mut cur, cur_pos, &mut toks);
                toks.push((c, String::new(), here));
            }
            c if c.is_whitespace() => flush(&mut cur, cur_pos, &mut toks),
            '?' => {
                flush(&mut cur, cur_pos, &mut toks);
                cur.push('?');
                cur_pos = here;
            }
            _ => {
                if cur.is_empty() {
                    cur_pos = here;
                }
                cur.push(c);
            }
        }
    }
    flush(&mut cur, cur_pos, &mut toks);

    // glue `:` `name` into `:name`
    let mut glued: Vec<RawToken> = Vec::new();
    for t in toks {
        if let Some(last) = glued.last_mut() {
            if t.0 == 'a' && last.0 == 'a' && last.1 == ":" {
                last.1.push_str(&t.1);
                continue;
            }
        }
        glued.push(t);
    }

    let mut stack: Vec<(Vec<SExpr>, (usize, usize))> = Vec::new();
    let mut top = Vec::new();
    for (kind, text, pos) in glued {
        match kind {
            '(' => stack.push((Vec::new(), pos)),
            ')' => {
                let Some((items, p)) = stack.pop() else {
                    return Err(ParseError::new(file, pos.0, pos.1, "unbalanced `)`"));
                };
                let e = SExpr::List(items, p);
                match stack.last_mut() {
                    Some(parent) => parent.0.push(e),
                    None => top.push(e),
                }
            }
            _ => {
                let e = SExpr::Atom(text, pos);
                match stack.last_mut() {
                    Some(parent) => parent.0.push(e),
                    None => top.push(e),
                }
            }
        }
    }
    if let Some((_, p)) = stack.last() {
        return Err(ParseError::new(file, p.0, p.1, "unclosed `(`"));
    }
    Ok(top)
}
