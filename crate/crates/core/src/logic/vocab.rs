use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use super::formula::{GroundLiteral, Literal, Term};
use super::LogicError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredId(pub u32);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncId(pub u32);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(pub u32);

impl ObjectId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PredKind {
    Primitive,
    Derived,
    Action,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
    pub kind: PredKind,
}

/// A function symbol with a finite integer range `min..=max`.
#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    pub name: String,
    pub arity: usize,
    pub min: i64,
    pub max: i64,
}

impl Function {
    pub fn range_len(&self) -> usize {
        (self.max - self.min + 1) as usize
    }
}

/// Body of a derived predicate definition.
#[derive(Clone, Debug, PartialEq)]
pub enum DerivedBody {
    /// `forall V: !atom`, e.g. `clear(X) := forall Y: !on(Y,X)`.
    ForallNot {
        var: String,
        pred: PredId,
        args: Vec<Term>,
    },
    And(Vec<Literal>),
    Or(Vec<Literal>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedDef {
    pub params: Vec<String>,
    pub body: DerivedBody,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Symbol {
    Pred(PredId),
    Func(FuncId),
}

/// Predicates, functions and derived definitions, independent of any object set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Signature {
    predicates: Vec<Predicate>,
    functions: Vec<Function>,
    derived: BTreeMap<PredId, DerivedDef>,
    names: HashMap<String, Symbol>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_predicate(&mut self, name: &str, arity: usize, kind: PredKind) -> Result<PredId, LogicError> {
        self.check_fresh(name)?;
        let id = PredId(self.predicates.len() as u32);
        self.predicates.push(Predicate { name: name.to_string(), arity, kind });
        self.names.insert(name.to_string(), Symbol::Pred(id));
        Ok(id)
    }

    pub fn add_function(&mut self, name: &str, arity: usize, min: i64, max: i64) -> Result<FuncId, LogicError> {
        self.check_fresh(name)?;
        if max < min {
            return Err(LogicError::EmptyRange(name.to_string()));
        }
        let id = FuncId(self.functions.len() as u32);
        self.functions.push(Function { name: name.to_string(), arity, min, max });
        self.names.insert(name.to_string(), Symbol::Func(id));
        Ok(id)
    }

    /// Attaches a definition to a predicate declared with [`PredKind::Derived`].
    pub fn define(&mut self, pred: PredId, def: DerivedDef) -> Result<(), LogicError> {
        let decl = self.predicate(pred);
        if decl.kind != PredKind::Derived {
            return Err(LogicError::KindMismatch { name: decl.name.clone(), expected: "derived" });
        }
        if def.params.len() != decl.arity {
            return Err(LogicError::Arity { name: decl.name.clone(), expected: decl.arity, found: def.params.len() });
        }
        let name = decl.name.clone();
        let check = |lit: &Literal, extra: Option<&str>| -> Result<(), LogicError> {
            self.check_literal(lit)?;
            for v in lit.variables() {
                if !def.params.iter().any(|p| p == v) && extra != Some(v) {
                    return Err(LogicError::UnsupportedDerived(name.clone(), format!("free variable `{v}` in body")));
                }
            }
            if let Literal::Atom { pred, .. } = lit {
                if self.predicate(*pred).kind == PredKind::Action {
                    return Err(LogicError::UnsupportedDerived(name.clone(), "action predicate in body".into()));
                }
            }
            Ok(())
        };
        match &def.body {
            DerivedBody::ForallNot { var, pred: p, args } => {
                let lit = Literal::Atom { pred: *p, args: args.clone(), positive: false };
                check(&lit, Some(var))?;
            }
            DerivedBody::And(lits) | DerivedBody::Or(lits) => {
                if lits.is_empty() {
                    return Err(LogicError::UnsupportedDerived(name, "empty body".into()));
                }
                for l in lits {
                    if matches!(l, Literal::Neq(..)) {
                        return Err(LogicError::UnsupportedDerived(name.clone(), "inequality in body".into()));
                    }
                    check(l, None)?;
                }
            }
        }
        self.derived.insert(pred, def);
        Ok(())
    }

    fn check_fresh(&self, name: &str) -> Result<(), LogicError> {
        if self.names.contains_key(name) {
            Err(LogicError::DuplicateSymbol(name.to_string()))
        } else {
            Ok(())
        }
    }

    /// Checks symbol kinds, arities and function ranges of a literal.
    pub fn check_literal(&self, lit: &Literal) -> Result<(), LogicError> {
        match lit {
            Literal::Atom { pred, args, .. } => {
                let p = self.predicate(*pred);
                if p.arity != args.len() {
                    return Err(LogicError::Arity { name: p.name.clone(), expected: p.arity, found: args.len() });
                }
            }
            Literal::FuncEq { func, args, value } => {
                let f = self.function(*func);
                if f.arity != args.len() {
                    return Err(LogicError::Arity { name: f.name.clone(), expected: f.arity, found: args.len() });
                }
                if *value < f.min || *value > f.max {
                    return Err(LogicError::OutOfRange { name: f.name.clone(), value: *value, min: f.min, max: f.max });
                }
            }
            Literal::Neq(..) => {}
        }
        Ok(())
    }

    pub fn predicate(&self, id: PredId) -> &Predicate {
        &self.predicates[id.0 as usize]
    }

    pub fn function(&self, id: FuncId) -> &Function {
        &self.functions[id.0 as usize]
    }

    pub fn predicates(&self) -> impl Iterator<Item = (PredId, &Predicate)> {
        self.predicates.iter().enumerate().map(|(i, p)| (PredId(i as u32), p))
    }

    pub fn functions(&self) -> impl Iterator<Item = (FuncId, &Function)> {
        self.functions.iter().enumerate().map(|(i, f)| (FuncId(i as u32), f))
    }

    pub fn derived(&self) -> &BTreeMap<PredId, DerivedDef> {
        &self.derived
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        self.names.get(name).copied()
    }

    pub fn pred_id(&self, name: &str) -> Option<PredId> {
        match self.lookup(name) {
            Some(Symbol::Pred(p)) => Some(p),
            _ => None,
        }
    }

    pub fn func_id(&self, name: &str) -> Option<FuncId> {
        match self.lookup(name) {
            Some(Symbol::Func(f)) => Some(f),
            _ => None,
        }
    }

    /// Predicates a derived predicate's body refers to.
    pub fn derived_dependencies(&self, pred: PredId) -> Vec<PredId> {
        let mut deps = Vec::new();
        if let Some(def) = self.derived.get(&pred) {
            match &def.body {
                DerivedBody::ForallNot { pred, .. } => deps.push(*pred),
                DerivedBody::And(lits) | DerivedBody::Or(lits) => {
                    for l in lits {
                        if let Literal::Atom { pred, .. } = l {
                            deps.push(*pred);
                        }
                    }
                }
            }
        }
        deps
    }

    /// Derived predicates in dependency order; errors on cycles or missing definitions.
    pub fn derived_order(&self) -> Result<Vec<PredId>, LogicError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks = vec![Mark::New; self.predicates.len()];
        let mut order = Vec::new();
        fn visit(sig: &Signature, p: PredId, marks: &mut [Mark], order: &mut Vec<PredId>) -> Result<(), LogicError> {
            match marks[p.0 as usize] {
                Mark::Done => return Ok(()),
                Mark::Active => return Err(LogicError::CyclicDerived(sig.predicate(p).name.clone())),
                Mark::New => {}
            }
            marks[p.0 as usize] = Mark::Active;
            for d in sig.derived_dependencies(p) {
                if sig.predicate(d).kind == PredKind::Derived {
                    visit(sig, d, marks, order)?;
                }
            }
            marks[p.0 as usize] = Mark::Done;
            order.push(p);
            Ok(())
        }
        for (id, p) in self.predicates() {
            if p.kind == PredKind::Derived {
                if !self.derived.contains_key(&id) {
                    return Err(LogicError::UnsupportedDerived(p.name.clone(), "missing definition".into()));
                }
                visit(self, id, &mut marks, &mut order)?;
            }
        }
        Ok(order)
    }
}

/// One ground derived atom and the ground literals it combines.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundDerived {
    pub atom: usize,
    pub disjunctive: bool,
    pub inputs: Vec<GroundLiteral>,
}

/// A signature together with a finite object set and the fixed layout of ground atoms.
///
/// Ground atoms of non-action predicates are numbered by predicate id and then by the
/// lexicographic order of their argument object ids; ground function applications are
/// numbered the same way in a separate index space.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    signature: Arc<Signature>,
    objects: Vec<String>,
    object_ids: HashMap<String, ObjectId>,
    pred_offsets: Vec<Option<usize>>,
    func_offsets: Vec<usize>,
    n_atoms: usize,
    n_funcs: usize,
    derived_plan: Vec<GroundDerived>,
}

impl Vocabulary {
    pub fn new(signature: Arc<Signature>, objects: Vec<String>) -> Result<Self, LogicError> {
        let mut object_ids = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if signature.lookup(o).is_some() || object_ids.insert(o.clone(), ObjectId(i as u32)).is_some() {
                return Err(LogicError::DuplicateSymbol(o.clone()));
            }
        }
        let n = objects.len();
        let mut offset = 0usize;
        let mut pred_offsets = Vec::new();
        for (_, p) in signature.predicates() {
            if p.kind == PredKind::Action {
                pred_offsets.push(None);
            } else {
                pred_offsets.push(Some(offset));
                offset += n.pow(p.arity as u32);
            }
        }
        let n_atoms = offset;
        let mut func_offsets = Vec::new();
        let mut offset = 0usize;
        for (_, f) in signature.functions() {
            func_offsets.push(offset);
            offset += n.pow(f.arity as u32);
        }
        let mut vocab = Vocabulary {
            signature,
            objects,
            object_ids,
            pred_offsets,
            func_offsets,
            n_atoms,
            n_funcs: offset,
            derived_plan: Vec::new(),
        };
        vocab.derived_plan = vocab.build_derived_plan()?;
        Ok(vocab)
    }

    fn build_derived_plan(&self) -> Result<Vec<GroundDerived>, LogicError> {
        let sig = self.signature.clone();
        let mut plan = Vec::new();
        for pred in sig.derived_order()? {
            let def = &sig.derived()[&pred];
            let arity = def.params.len();
            for args in self.tuples(arity) {
                let mut sub = super::Substitution::new();
                for (p, o) in def.params.iter().zip(&args) {
                    sub.insert(p.clone(), *o);
                }
                let atom = self.atom_index(pred, &args)?;
                let (disjunctive, inputs) = match &def.body {
                    DerivedBody::ForallNot { var, pred: inner, args: inner_args } => {
                        let mut inputs = Vec::with_capacity(self.objects.len());
                        for o in 0..self.objects.len() {
                            let mut s = sub.clone();
                            s.insert(var.clone(), ObjectId(o as u32));
                            let lit = Literal::Atom { pred: *inner, args: inner_args.clone(), positive: false };
                            inputs.push(self.ground_literal(&lit, &s)?);
                        }
                        (false, inputs)
                    }
                    DerivedBody::And(lits) => {
                        (false, lits.iter().map(|l| self.ground_literal(l, &sub)).collect::<Result<_, _>>()?)
                    }
                    DerivedBody::Or(lits) => {
                        (true, lits.iter().map(|l| self.ground_literal(l, &sub)).collect::<Result<_, _>>()?)
                    }
                };
                plan.push(GroundDerived { atom, disjunctive, inputs });
            }
        }
        Ok(plan)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.object_ids.get(name).copied()
    }

    pub fn object_name(&self, id: ObjectId) -> &str {
        &self.objects[id.index()]
    }

    /// Number of ground atoms (primitive and derived).
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Number of ground function applications.
    pub fn n_funcs(&self) -> usize {
        self.n_funcs
    }

    pub fn derived_plan(&self) -> &[GroundDerived] {
        &self.derived_plan
    }

    /// All argument tuples of the given arity in lexicographic order.
    pub fn tuples(&self, arity: usize) -> impl Iterator<Item = Vec<ObjectId>> {
        let n = self.objects.len();
        let total = n.pow(arity as u32);
        (0..total).map(move |mut k| {
            let mut args = vec![ObjectId(0); arity];
            for slot in args.iter_mut().rev() {
                *slot = ObjectId((k % n) as u32);
                k /= n;
            }
            args
        })
    }

    fn tuple_rank(&self, args: &[ObjectId]) -> usize {
        let n = self.objects.len();
        args.iter().fold(0, |acc, a| acc * n + a.index())
    }

    pub fn atom_index(&self, pred: PredId, args: &[ObjectId]) -> Result<usize, LogicError> {
        let p = self.signature.predicate(pred);
        if p.arity != args.len() {
            return Err(LogicError::Arity { name: p.name.clone(), expected: p.arity, found: args.len() });
        }
        let base = self.pred_offsets[pred.0 as usize]
            .ok_or_else(|| LogicError::KindMismatch { name: p.name.clone(), expected: "state predicate" })?;
        Ok(base + self.tuple_rank(args))
    }

    pub fn func_index(&self, func: FuncId, args: &[ObjectId]) -> Result<usize, LogicError> {
        let f = self.signature.function(func);
        if f.arity != args.len() {
            return Err(LogicError::Arity { name: f.name.clone(), expected: f.arity, found: args.len() });
        }
        Ok(self.func_offsets[func.0 as usize] + self.tuple_rank(args))
    }

    fn untuple(&self, mut rank: usize, arity: usize) -> Vec<ObjectId> {
        let n = self.objects.len();
        let mut args = vec![ObjectId(0); arity];
        for slot in args.iter_mut().rev() {
            *slot = ObjectId((rank % n) as u32);
            rank /= n;
        }
        args
    }

    /// Inverse of [`Vocabulary::atom_index`].
    pub fn atom_at(&self, index: usize) -> (PredId, Vec<ObjectId>) {
        let mut best = None;
        for (i, off) in self.pred_offsets.iter().enumerate() {
            if let Some(off) = off {
                let arity = self.signature.predicates[i].arity;
                let size = self.objects.len().pow(arity as u32);
                if index >= *off && index < off + size {
                    best = Some((PredId(i as u32), self.untuple(index - off, arity)));
                    break;
                }
            }
        }
        best.expect("atom index out of range")
    }

    pub fn func_at(&self, index: usize) -> (FuncId, Vec<ObjectId>) {
        for (i, off) in self.func_offsets.iter().enumerate() {
            let arity = self.signature.functions[i].arity;
            let size = self.objects.len().pow(arity as u32);
            if index >= *off && index < off + size {
                return (FuncId(i as u32), self.untuple(index - off, arity));
            }
        }
        panic!("function index out of range")
    }

    pub fn is_derived_atom(&self, index: usize) -> bool {
        let (p, _) = self.atom_at(index);
        self.signature.predicate(p).kind == PredKind::Derived
    }

    /// Atom indices of all primitive ground atoms.
    pub fn primitive_atoms(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, off) in self.pred_offsets.iter().enumerate() {
            let p = &self.signature.predicates[i];
            if let (Some(off), PredKind::Primitive) = (off, p.kind) {
                out.extend(*off..off + self.objects.len().pow(p.arity as u32));
            }
        }
        out
    }

    pub fn resolve_term(&self, term: &Term, sub: &super::Substitution) -> Result<ObjectId, LogicError> {
        match term {
            Term::Var(v) => sub.get(v).copied().ok_or_else(|| LogicError::UnboundVariable(v.clone())),
            Term::Const(c) => self.object_id(c).ok_or_else(|| LogicError::UnknownObject(c.clone())),
        }
    }

    /// Grounds a literal under a substitution into the flat atom/function layout.
    pub fn ground_literal(&self, lit: &Literal, sub: &super::Substitution) -> Result<GroundLiteral, LogicError> {
        match lit {
            Literal::Atom { pred, args, positive } => {
                let objs = args.iter().map(|t| self.resolve_term(t, sub)).collect::<Result<Vec<_>, _>>()?;
                Ok(GroundLiteral::Atom { index: self.atom_index(*pred, &objs)?, value: *positive })
            }
            Literal::FuncEq { func, args, value } => {
                let objs = args.iter().map(|t| self.resolve_term(t, sub)).collect::<Result<Vec<_>, _>>()?;
                Ok(GroundLiteral::Func { index: self.func_index(*func, &objs)?, value: *value })
            }
            Literal::Neq(a, b) => Ok(GroundLiteral::Const(self.resolve_term(a, sub)? != self.resolve_term(b, sub)?)),
        }
    }

    pub fn atom_name(&self, index: usize) -> String {
        let (p, args) = self.atom_at(index);
        self.format_app(&self.signature.predicate(p).name, &args)
    }

    pub fn func_name(&self, index: usize) -> String {
        let (f, args) = self.func_at(index);
        self.format_app(&self.signature.function(f).name, &args)
    }

    pub fn format_app(&self, name: &str, args: &[ObjectId]) -> String {
        let args: Vec<&str> = args.iter().map(|a| self.object_name(*a)).collect();
        format!("{}({})", name, args.join(","))
    }

    pub fn display_literal<'a>(&'a self, lit: &'a GroundLiteral) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Vocabulary, &'a GroundLiteral);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.1 {
                    GroundLiteral::Atom { index, value } => {
                        write!(f, "{}{}", if *value { "" } else { "!" }, self.0.atom_name(*index))
                    }
                    GroundLiteral::Func { index, value } => write!(f, "{}={}", self.0.func_name(*index), value),
                    GroundLiteral::Const(v) => write!(f, "{v}"),
                }
            }
        }
        D(self, lit)
    }
}
