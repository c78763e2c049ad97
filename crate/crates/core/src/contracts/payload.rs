//! Call arguments and provenance payload values.

use serde::{Deserialize, Serialize};

use crate::codec::{Decode, Decoder, Encode, Encoder, EncodingError};
use crate::hash::Address;
use crate::offchain::ContentId;

/// A single provenance value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Address(Address),
    Content(ContentId),
}

impl Value {
    fn tag(&self) -> u64 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Text(_) => 2,
            Value::Address(_) => 3,
            Value::Content(_) => 4,
        }
    }

    pub fn as_address(&self) -> Option<Address> {
        match self {
            Value::Address(a) => Some(*a),
            _ => None,
        }
    }
}

impl Encode for Value {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_u64(self.tag());
        match self {
            Value::Int(v) => enc.put_i64(*v),
            Value::Float(v) => enc.put_u64(v.to_bits()),
            Value::Text(s) => enc.put_str(s),
            Value::Address(a) => enc.put_address(a),
            Value::Content(c) => enc.put_nested(c),
        };
    }
}

impl Decode for Value {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(match dec.get_u64()? {
            0 => Value::Int(dec.get_i64()?),
            1 => Value::Float(f64::from_bits(dec.get_u64()?)),
            2 => Value::Text(dec.get_str("value.text")?),
            3 => Value::Address(dec.get_address("value.address")?),
            4 => Value::Content(dec.get_nested()?),
            tag => {
                return Err(EncodingError::BadTag {
                    field: "value",
                    tag,
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: Value,
}

impl NamedValue {
    pub fn new(name: impl Into<String>, value: Value) -> Self {
        NamedValue {
            name: name.into(),
            value,
        }
    }
}

impl Encode for NamedValue {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_str(&self.name).put_nested(&self.value);
    }
}

impl Decode for NamedValue {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(NamedValue {
            name: dec.get_str("name")?,
            value: dec.get_nested()?,
        })
    }
}

/// Inputs, outputs and parameters of a reported activity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActivityPayload {
    #[serde(default)]
    pub inputs: Vec<NamedValue>,
    #[serde(default)]
    pub outputs: Vec<NamedValue>,
    #[serde(default)]
    pub params: Vec<NamedValue>,
}

impl Encode for ActivityPayload {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_list(&self.inputs)
            .put_list(&self.outputs)
            .put_list(&self.params);
    }
}

impl Decode for ActivityPayload {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(ActivityPayload {
            inputs: dec.get_list()?,
            outputs: dec.get_list()?,
            params: dec.get_list()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssetMetadata {
    pub name: String,
    #[serde(default)]
    pub version: String,
    #[serde(default)]
    pub description: String,
}

impl Encode for AssetMetadata {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_str(&self.name)
            .put_str(&self.version)
            .put_str(&self.description);
    }
}

impl Decode for AssetMetadata {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(AssetMetadata {
            name: dec.get_str("metadata.name")?,
            version: dec.get_str("metadata.version")?,
            description: dec.get_str("metadata.description")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterDatasetArgs {
    pub metadata: AssetMetadata,
    pub ancestor: Option<Address>,
    pub anchor: Option<ContentId>,
}

impl Encode for RegisterDatasetArgs {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_nested(&self.metadata)
            .put_opt_address(self.ancestor.as_ref())
            .put_opt_nested(self.anchor.as_ref());
    }
}

impl Decode for RegisterDatasetArgs {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(RegisterDatasetArgs {
            metadata: dec.get_nested()?,
            ancestor: dec.get_opt_address("ancestor")?,
            anchor: dec.get_opt_nested()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterModelArgs {
    pub metadata: AssetMetadata,
}

impl Encode for RegisterModelArgs {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_nested(&self.metadata);
    }
}

impl Decode for RegisterModelArgs {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(RegisterModelArgs {
            metadata: dec.get_nested()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishArgs {
    pub anchor: ContentId,
}

impl Encode for PublishArgs {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_nested(&self.anchor);
    }
}

impl Decode for PublishArgs {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, EncodingError> {
        Ok(PublishArgs {
            anchor: dec.get_nested()?,
        })
    }
}
