//! Experience triples in CSV form.
//!
//! ```text
//! state,action,next
//! "on(a,b) cube(a) cube(b)",grab(a),"inhand(a) cube(a) cube(b)"
//! ```
//!
//! States list their true primitive atoms separated by whitespace; function
//! values are written `f(args)=v`. Objects are collected from all arguments.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::logic::{PredKind, Signature, State, Symbol, Vocabulary};
use crate::rules::{ExperienceTriple, GroundAction};

use super::ParseError;

struct App<'a> {
    name: &'a str,
    args: Vec<&'a str>,
    value: Option<&'a str>,
}

fn split_app(tok: &str) -> Option<App<'_>> {
    let (head, value) = match tok.split_once('=') {
        Some((h, v)) => (h, Some(v)),
        None => (tok, None),
    };
    let (name, args) = match head.split_once('(') {
        Some((n, rest)) => {
            let inner = rest.strip_suffix(')')?;
            (n, inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
        }
        None => (head, Vec::new()),
    };
    Some(App { name: name.trim(), args, value })
}

fn tokens(field: &str) -> impl Iterator<Item = &str> {
    field.split(|c: char| c.is_whitespace() || c == ';').filter(|t| !t.is_empty())
}

pub fn parse_triples(
    text: &str,
    file: &str,
    sig: Arc<Signature>,
) -> Result<(Arc<Vocabulary>, Vec<ExperienceTriple>), ParseError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let err = |line: u64, msg: String| ParseError::new(file, line as usize, 1, msg);
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["state", "action", "next"] {
        return Err(err(1, "expected the header `state,action,next`".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec[0].to_string(), rec[1].to_string(), rec[2].to_string()));
    }
    let mut objects = BTreeSet::new();
    for (line, s, a, n) in &rows {
        for tok in tokens(s).chain(tokens(n)).chain(std::iter::once(a.as_str())) {
            let app = split_app(tok).ok_or_else(|| err(*line, format!("malformed `{tok}`")))?;
            objects.extend(app.args.iter().map(|s| s.to_string()));
        }
    }
    let vocab =
        Arc::new(Vocabulary::new(sig.clone(), objects.into_iter().collect()).map_err(|e| err(1, e.to_string()))?);
    let state = |line: u64, field: &str| -> Result<State, ParseError> {
        let mut s = State::new(&vocab);
        for tok in tokens(field) {
            let app = split_app(tok).ok_or_else(|| err(line, format!("malformed `{tok}`")))?;
            let args = app.args.iter().map(|o| vocab.object_id(o).expect("collected")).collect::<Vec<_>>();
            match (sig.lookup(app.name), app.value) {
                (Some(Symbol::Pred(p)), None) if sig.predicate(p).kind == PredKind::Primitive => {
                    s.set_atom(vocab.atom_index(p, &args).map_err(|e| err(line, e.to_string()))?, true);
                }
                (Some(Symbol::Func(f)), Some(v)) => {
                    let v: i64 = v.trim().parse().map_err(|_| err(line, format!("bad value in `{tok}`")))?;
                    s.set_func(vocab.func_index(f, &args).map_err(|e| err(line, e.to_string()))?, v);
                }
                _ => return Err(err(line, format!("`{tok}` is not a primitive atom or function value"))),
            }
        }
        s.eval_derived(&vocab);
        Ok(s)
    };
    let mut out = Vec::with_capacity(rows.len());
    for (line, s, a, n) in &rows {
        let action = GroundAction::parse(a, &vocab).map_err(|e| err(*line, e.to_string()))?;
        out.push(ExperienceTriple { state: state(*line, s)?, action, next: state(*line, n)? });
    }
    Ok((vocab, out))
}
