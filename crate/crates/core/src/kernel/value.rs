use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;

/// A runtime value. Composite values are reference counted so that cloning a
/// state is cheap; equality, ordering and hashing are structural.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(Arc<str>),
    Set(Arc<BTreeSet<Value>>),
    Seq(Arc<Vec<Value>>),
    Record(Arc<BTreeMap<Arc<str>, Value>>),
    Map(Arc<BTreeMap<Value, Value>>),
}

impl Value {
    /// True when both are the same shared allocation (or equal scalars), which
    /// implies structural equality without walking the value.
    pub fn same_allocation(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Sym(a), Value::Sym(b)) => Arc::ptr_eq(a, b),
            (Value::Set(a), Value::Set(b)) => Arc::ptr_eq(a, b),
            (Value::Seq(a), Value::Seq(b)) => Arc::ptr_eq(a, b),
            (Value::Record(a), Value::Record(b)) => Arc::ptr_eq(a, b),
            (Value::Map(a), Value::Map(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }

    pub fn sym(name: &str) -> Value {
        Value::Sym(Arc::from(name))
    }

    pub fn set<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Set(Arc::new(items.into_iter().collect()))
    }

    pub fn seq<I: IntoIterator<Item = Value>>(items: I) -> Value {
        Value::Seq(Arc::new(items.into_iter().collect()))
    }

    pub fn record<'a, I: IntoIterator<Item = (&'a str, Value)>>(fields: I) -> Value {
        Value::Record(Arc::new(fields.into_iter().map(|(k, v)| (Arc::from(k), v)).collect()))
    }

    pub fn map<I: IntoIterator<Item = (Value, Value)>>(entries: I) -> Value {
        Value::Map(Arc::new(entries.into_iter().collect()))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Sym(_) => "symbol",
            Value::Set(_) => "set",
            Value::Seq(_) => "sequence",
            Value::Record(_) => "record",
            Value::Map(_) => "map",
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    /// Stable JSON encoding used by traces and reports.
    ///
    /// Booleans, integers and symbols map to JSON scalars; composites are
    /// wrapped in a single-key object naming their kind.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Bool(b) => json!(b),
            Value::Int(i) => json!(i),
            Value::Sym(s) => json!(s.as_ref()),
            Value::Set(s) => json!({ "set": s.iter().map(Value::to_json).collect::<Vec<_>>() }),
            Value::Seq(s) => json!({ "seq": s.iter().map(Value::to_json).collect::<Vec<_>>() }),
            Value::Record(r) => {
                let fields: serde_json::Map<String, serde_json::Value> =
                    r.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect();
                json!({ "record": fields })
            }
            Value::Map(m) => json!({
                "map": m.iter().map(|(k, v)| json!([k.to_json(), v.to_json()])).collect::<Vec<_>>()
            }),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Value, String> {
        use serde_json::Value as J;
        match v {
            J::Bool(b) => Ok(Value::Bool(*b)),
            J::Number(n) => n.as_i64().map(Value::Int).ok_or_else(|| format!("non-integer number {n}")),
            J::String(s) => Ok(Value::sym(s)),
            J::Object(o) if o.len() == 1 => {
                let (tag, body) = o.iter().next().expect("one entry");
                match (tag.as_str(), body) {
                    ("set", J::Array(items)) => {
                        Ok(Value::set(items.iter().map(Value::from_json).collect::<Result<Vec<_>, _>>()?))
                    }
                    ("seq", J::Array(items)) => {
                        Ok(Value::seq(items.iter().map(Value::from_json).collect::<Result<Vec<_>, _>>()?))
                    }
                    ("record", J::Object(fields)) => {
                        let mut out = BTreeMap::new();
                        for (k, v) in fields {
                            out.insert(Arc::from(k.as_str()), Value::from_json(v)?);
                        }
                        Ok(Value::Record(Arc::new(out)))
                    }
                    ("map", J::Array(entries)) => {
                        let mut out = BTreeMap::new();
                        for e in entries {
                            match e {
                                J::Array(pair) if pair.len() == 2 => {
                                    out.insert(Value::from_json(&pair[0])?, Value::from_json(&pair[1])?);
                                }
                                _ => return Err("map entries must be [key, value] pairs".into()),
                            }
                        }
                        Ok(Value::Map(Arc::new(out)))
                    }
                    _ => Err(format!("unknown value encoding `{tag}`")),
                }
            }
            other => Err(format!("cannot decode value from {other}")),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        Value::from_json(&raw).map_err(D::Error::custom)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, items: impl Iterator<Item = impl fmt::Display>) -> fmt::Result {
            for (i, item) in items.enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{item}")?;
            }
            Ok(())
        }
        match self {
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
            Value::Set(s) => {
                f.write_str("{")?;
                list(f, s.iter())?;
                f.write_str("}")
            }
            Value::Seq(s) => {
                f.write_str("<<")?;
                list(f, s.iter())?;
                f.write_str(">>")
            }
            Value::Record(r) => {
                f.write_str("[")?;
                list(f, r.iter().map(|(k, v)| format!("{k} |-> {v}")))?;
                f.write_str("]")
            }
            Value::Map(m) => {
                f.write_str("(")?;
                list(f, m.iter().map(|(k, v)| format!("{k} :> {v}")))?;
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_encoding_round_trips() {
        let v = Value::map([
            (Value::sym("s1"), Value::record([("term", Value::Int(1)), ("ok", Value::Bool(true))])),
            (Value::sym("s2"), Value::seq([Value::set([Value::Int(2), Value::Int(1)])])),
        ]);
        let back = Value::from_json(&v.to_json()).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn sets_are_canonical() {
        let a = Value::set([Value::Int(3), Value::Int(1)]);
        let b = Value::set([Value::Int(1), Value::Int(3), Value::Int(1)]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "{1, 3}");
    }
}
