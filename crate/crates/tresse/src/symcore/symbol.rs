use std::collections::HashMap;
use std::sync::{LazyLock, RwLock};

/// Interned variable name. Ordering is by intern id; the standard variables
/// `x`, `y`, `p` and every jet variable up to total order 9 are interned at
/// startup in a fixed sequence, so their relative order is stable across runs.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Symbol(pub(crate) u32);

struct Table {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Table {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }
}

fn seeded_table() -> Table {
    let mut t = Table { names: Vec::new(), index: HashMap::new() };
    for v in ["x", "y", "p"] {
        t.intern(v);
    }
    // Jet variables in order of total degree, then (l, m, k) lexicographically.
    for total in 0..=9u8 {
        for l in 0..=total {
            for m in 0..=(total - l) {
                let k = total - l - m;
                t.intern(&jet_name(l, m, k));
            }
        }
    }
    t
}

pub(crate) fn jet_name(l: u8, m: u8, k: u8) -> String {
    match (l, m, k) {
        (0, 0, 0) => "u".to_string(),
        (0, 0, k) => format!("u^{k}"),
        (l, m, 0) => format!("u_{{{l}{m}}}"),
        (l, m, k) => format!("u^{k}_{{{l}{m}}}"),
    }
}

static TABLE: LazyLock<RwLock<Table>> = LazyLock::new(|| RwLock::new(seeded_table()));

impl Symbol {
    pub fn intern(name: &str) -> Symbol {
        {
            let t = TABLE.read().unwrap();
            if let Some(&id) = t.index.get(name) {
                return Symbol(id);
            }
        }
        Symbol(TABLE.write().unwrap().intern(name))
    }

    pub fn name(self) -> String {
        TABLE.read().unwrap().names[self.0 as usize].clone()
    }
}

/// Resolve a symbol back to its name.
pub fn symbol_name(s: Symbol) -> String {
    s.name()
}
