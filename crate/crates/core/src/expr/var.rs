use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};

/// Interned symbol name. Used for chart variables, the exponential symbol `u`,
/// and names of unknown functions in jet expressions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

struct Interner {
    names: Vec<&'static str>,
    ids: HashMap<&'static str, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        let mut it = Interner { names: Vec::new(), ids: HashMap::new() };
        // `u` is always id 0
        it.names.push("u");
        it.ids.insert("u", 0);
        RwLock::new(it)
    })
}

impl Var {
    /// The Laurent symbol standing for `exp(a/2)`.
    pub const U: Var = Var(0);

    pub fn new(name: &str) -> Var {
        if let Some(&id) = interner().read().unwrap().ids.get(name) {
            return Var(id);
        }
        let mut it = interner().write().unwrap();
        if let Some(&id) = it.ids.get(name) {
            return Var(id);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = it.names.len() as u32;
        it.names.push(leaked);
        it.ids.insert(leaked, id);
        Var(id)
    }

    pub fn name(self) -> &'static str {
        interner().read().unwrap().names[self.0 as usize]
    }

    pub fn is_u(self) -> bool {
        self == Var::U
    }

    /// Name-based ordering, independent of interning order.
    pub fn cmp_name(self, other: Var) -> std::cmp::Ordering {
        self.name().cmp(other.name())
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered coordinate variables plus the distinguished variable `a` whose
/// exponential `exp(a/2)` is carried by the symbol `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    vars: Vec<Var>,
    exp_var: Option<Var>,
}

impl Chart {
    pub fn new(names: &[&str], exp_var: Option<&str>) -> Result<Chart> {
        let mut vars = Vec::with_capacity(names.len());
        for name in names {
            if *name == "u" {
                return Err(Error::ReservedSymbol("a chart variable"));
            }
            let v = Var::new(name);
            if vars.contains(&v) {
                return Err(Error::DuplicateVariable(name.to_string()));
            }
            vars.push(v);
        }
        let exp_var = match exp_var {
            Some(name) => {
                if name != "a" {
                    return Err(Error::InvalidArgument(format!(
                        "exponential variable must be `a`, got `{name}`"
                    )));
                }
                let v = Var::new(name);
                if !vars.contains(&v) {
                    return Err(Error::UnknownVariable(name.to_string()));
                }
                Some(v)
            }
            None => None,
        };
        Ok(Chart { vars, exp_var })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn exp_var(&self) -> Option<Var> {
        self.exp_var
    }

    pub fn index_of(&self, v: Var) -> Option<usize> {
        self.vars.iter().position(|&w| w == v)
    }

    pub fn contains(&self, v: Var) -> bool {
        self.vars.contains(&v)
    }

    pub fn var(&self, name: &str) -> Result<Var> {
        let v = Var::new(name);
        if self.contains(v) {
            Ok(v)
        } else {
            Err(Error::UnknownVariable(name.to_string()))
        }
    }

    /// Checks that `v` may be differentiated or integrated against.
    pub fn check_var(&self, v: Var) -> Result<()> {
        if v.is_u() {
            return Err(Error::ReservedSymbol("a differentiation variable"));
        }
        if !self.contains(v) {
            return Err(Error::UnknownVariable(v.name().to_string()));
        }
        Ok(())
    }
}
