//! Domain values and their base types.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::error::{Error, Result};

/// Serialized form of the single element of the terminal node's domain.
pub const UNIT_LITERAL: &str = "⊤";

/// Base type of an attribute domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseType {
    Integer,
    Float,
    Text,
    Date,
    Unit,
}

impl BaseType {
    pub fn is_numeric(self) -> bool {
        matches!(self, BaseType::Integer | BaseType::Float)
    }

    pub fn is_ordered(self) -> bool {
        !matches!(self, BaseType::Unit)
    }

    pub fn name(self) -> &'static str {
        match self {
            BaseType::Integer => "integer",
            BaseType::Float => "float",
            BaseType::Text => "text",
            BaseType::Date => "date",
            BaseType::Unit => "unit",
        }
    }

    pub fn admits(self, value: &Value) -> bool {
        matches!(
            (self, value),
            (BaseType::Integer, Value::Int(_))
                | (BaseType::Float, Value::Float(_))
                | (BaseType::Text, Value::Text(_))
                | (BaseType::Date, Value::Date(_))
                | (BaseType::Unit, Value::Unit)
        )
    }

    /// Parse a JSON scalar into a value of this type.
    pub fn value_from_json(self, json: &Json) -> Result<Value> {
        let bad = || Error::Domain {
            value: json.to_string(),
            domain: self.name().to_string(),
        };
        match self {
            BaseType::Integer => json.as_i64().map(Value::Int).ok_or_else(bad),
            BaseType::Float => json.as_f64().map(Value::Float).ok_or_else(bad),
            BaseType::Text => json.as_str().map(|s| Value::Text(s.to_string())).ok_or_else(bad),
            BaseType::Date => json.as_str().ok_or_else(bad).and_then(Value::date),
            BaseType::Unit => match json.as_str() {
                Some(UNIT_LITERAL) => Ok(Value::Unit),
                _ => Err(bad()),
            },
        }
    }

    /// Parse a textual cell (CSV) into a value of this type.
    pub fn value_from_str(self, text: &str) -> Result<Value> {
        let bad = || Error::Domain {
            value: text.to_string(),
            domain: self.name().to_string(),
        };
        let text = text.trim();
        match self {
            BaseType::Integer => text.parse().map(Value::Int).map_err(|_| bad()),
            BaseType::Float => text.parse().map(Value::Float).map_err(|_| bad()),
            BaseType::Text => Ok(Value::Text(text.to_string())),
            BaseType::Date => Value::date(text),
            BaseType::Unit if text == UNIT_LITERAL => Ok(Value::Unit),
            BaseType::Unit => Err(bad()),
        }
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single domain value. Values of product nodes are tuples whose
/// components follow the canonical factor order of the node.
#[derive(Debug, Clone)]
pub enum Value {
    Unit,
    Int(i64),
    Float(f64),
    Text(String),
    /// ISO-8601 calendar date, stored in its `YYYY-MM-DD` form.
    Date(String),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    /// Validated ISO-8601 date.
    pub fn date(s: &str) -> Result<Self> {
        chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(|d| Value::Date(d.format("%Y-%m-%d").to_string()))
            .map_err(|_| Error::Domain {
                value: s.to_string(),
                domain: "date".to_string(),
            })
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Unit => 0,
            Value::Int(_) => 1,
            Value::Float(_) => 2,
            Value::Text(_) => 3,
            Value::Date(_) => 4,
            Value::Tuple(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Unit => "unit",
            Value::Int(_) => "integer",
            Value::Float(_) => "float",
            Value::Text(_) => "text",
            Value::Date(_) => "date",
            Value::Tuple(_) => "tuple",
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    /// Semantic comparison used by restriction predicates: integers and
    /// floats compare numerically, other kinds only with themselves.
    pub fn compare(&self, other: &Value) -> Result<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Ok(a.cmp(b)),
            (Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_)) => {
                let (a, b) = (self.as_f64().unwrap(), other.as_f64().unwrap());
                Ok(a.total_cmp(&b))
            }
            (Value::Text(a), Value::Text(b)) | (Value::Date(a), Value::Date(b)) => Ok(a.cmp(b)),
            (Value::Unit, Value::Unit) => Ok(Ordering::Equal),
            (Value::Tuple(a), Value::Tuple(b)) if a.len() == b.len() => {
                for (x, y) in a.iter().zip(b) {
                    match x.compare(y)? {
                        Ordering::Equal => continue,
                        o => return Ok(o),
                    }
                }
                Ok(Ordering::Equal)
            }
            _ => Err(Error::PredicateType {
                left: self.kind().to_string(),
                right: other.kind().to_string(),
            }),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Unit => Json::String(UNIT_LITERAL.to_string()),
            Value::Int(i) => Json::from(*i),
            Value::Float(x) => serde_json::Number::from_f64(*x)
                .map(Json::Number)
                .unwrap_or(Json::Null),
            Value::Text(s) | Value::Date(s) => Json::String(s.clone()),
            Value::Tuple(vs) => Json::Array(vs.iter().map(Value::to_json).collect()),
        }
    }

    /// Text used in CSV cells and plain listings.
    pub fn to_cell(&self) -> String {
        match self {
            Value::Text(s) | Value::Date(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Unit, Value::Unit) => Ordering::Equal,
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) | (Value::Date(a), Value::Date(b)) => a.cmp(b),
            (Value::Tuple(a), Value::Tuple(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Unit => {}
            Value::Int(i) => i.hash(state),
            Value::Float(x) => x.to_bits().hash(state),
            Value::Text(s) | Value::Date(s) => s.hash(state),
            Value::Tuple(vs) => vs.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str(UNIT_LITERAL),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Value::Text(s) => write!(f, "{s:?}"),
            Value::Date(s) => write!(f, "{s:?}"),
            Value::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}
