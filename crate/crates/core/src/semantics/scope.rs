use std::collections::HashMap;

/// What kind of declaration introduced a name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Param,
    Local,
    Global,
    Function,
    Struct,
}

/// A stack of scopes; lookups search innermost first.
#[derive(Debug, Clone)]
pub struct SymbolTable<T> {
    scopes: Vec<HashMap<String, T>>,
}

impl<T> Default for SymbolTable<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> SymbolTable<T> {
    /// A table with one (module-level) scope.
    pub fn new() -> Self {
        Self { scopes: vec![HashMap::new()] }
    }

    pub fn push(&mut self) {
        self.scopes.push(HashMap::new());
    }

    pub fn pop(&mut self) {
        assert!(self.scopes.len() > 1, "cannot pop the module scope");
        self.scopes.pop();
    }

    pub fn depth(&self) -> usize {
        self.scopes.len()
    }

    /// Inserts into the innermost scope; returns false if the name was
    /// already declared in that scope.
    pub fn insert(&mut self, name: impl Into<String>, value: T) -> bool {
        let scope = self.scopes.last_mut().expect("at least one scope");
        let name = name.into();
        if scope.contains_key(&name) {
            return false;
        }
        scope.insert(name, value);
        true
    }

    pub fn lookup(&self, name: &str) -> Option<&T> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    pub fn lookup_mut(&mut self, name: &str) -> Option<&mut T> {
        self.scopes.iter_mut().rev().find_map(|s| s.get_mut(name))
    }

    /// Whether `name` resolves to the outermost (module) scope.
    pub fn is_module_level(&self, name: &str) -> bool {
        let inner = self.scopes[1..].iter().any(|s| s.contains_key(name));
        !inner && self.scopes[0].contains_key(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shadowing() {
        let mut t = SymbolTable::new();
        t.insert("x", 1);
        t.push();
        assert!(t.insert("x", 2));
        assert!(!t.insert("x", 3));
        assert_eq!(t.lookup("x"), Some(&2));
        assert!(!t.is_module_level("x"));
        t.pop();
        assert_eq!(t.lookup("x"), Some(&1));
        assert!(t.is_module_level("x"));
    }
}
