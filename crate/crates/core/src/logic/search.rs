use super::formula::{Conjunction, GroundLiteral, Literal, Substitution};
use super::state::State;
use super::vocab::{ObjectId, Vocabulary};
use super::LogicError;

/// Backtracking enumeration of bindings for `vars`, extending `fixed`.
///
/// Each literal is tested as soon as all of its variables are bound; `test` decides
/// whether a grounded literal is acceptable. Bindings are produced in lexicographic
/// order of object ids, taken in the order of `vars`.
pub fn search_bindings<F, E>(
    vocab: &Vocabulary,
    vars: &[String],
    fixed: &Substitution,
    lits: &[Literal],
    mut test: F,
    mut emit: E,
) -> Result<(), LogicError>
where
    F: FnMut(&Literal, &GroundLiteral) -> bool,
    E: FnMut(&Substitution),
{
    // checks[0] runs before any binding; checks[d + 1] after binding vars[d]
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); vars.len() + 1];
    for (li, lit) in lits.iter().enumerate() {
        let mut ready = 0;
        for v in lit.variables() {
            if let Some(pos) = vars.iter().position(|x| x == v) {
                ready = ready.max(pos + 1);
            } else if !fixed.contains_key(v) {
                return Err(LogicError::UnboundVariable(v.to_string()));
            }
        }
        checks[ready].push(li);
    }

    let mut sub = fixed.clone();
    for &li in &checks[0] {
        let g = vocab.ground_literal(&lits[li], &sub)?;
        if !test(&lits[li], &g) {
            return Ok(());
        }
    }
    if vars.is_empty() {
        emit(&sub);
        return Ok(());
    }

    let n = vocab.n_objects() as u32;
    let mut choice = vec![0u32; vars.len()];
    let mut depth = 0usize;
    'outer: loop {
        if choice[depth] >= n {
            sub.remove(&vars[depth]);
            if depth == 0 {
                break;
            }
            choice[depth] = 0;
            depth -= 1;
            choice[depth] += 1;
            continue;
        }
        sub.insert(vars[depth].clone(), ObjectId(choice[depth]));
        for &li in &checks[depth + 1] {
            let g = vocab.ground_literal(&lits[li], &sub)?;
            if !test(&lits[li], &g) {
                choice[depth] += 1;
                continue 'outer;
            }
        }
        if depth + 1 == vars.len() {
            emit(&sub);
            choice[depth] += 1;
        } else {
            depth += 1;
        }
    }
    Ok(())
}

/// All substitutions of the formula's free variables (extending `fixed`) under which
/// the formula holds in `state`.
pub fn enumerate_covering_substitutions(
    vocab: &Vocabulary,
    formula: &Conjunction,
    state: &State,
    fixed: &Substitution,
) -> Result<Vec<Substitution>, LogicError> {
    let vars: Vec<String> = formula.free_vars().into_iter().filter(|v| !fixed.contains_key(v)).collect();
    let mut out = Vec::new();
    search_bindings(vocab, &vars, fixed, formula.literals(), |_, g| state.satisfies(g), |s| out.push(s.clone()))?;
    Ok(out)
}
