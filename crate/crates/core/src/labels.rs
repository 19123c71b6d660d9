//! Serde adapters writing noise labels as -1.

use serde::{Deserialize, Deserializer, Serializer};

fn decode<E: serde::de::Error>(v: i64) -> Result<Option<usize>, E> {
    match v {
        -1 => Ok(None),
        v if v >= 0 => Ok(Some(v as usize)),
        v => Err(E::custom(format!("invalid label {v}"))),
    }
}

pub(crate) fn serialize<S: Serializer>(label: &Option<usize>, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_i64(label.map_or(-1, |l| l as i64))
}

pub(crate) fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<usize>, D::Error> {
    decode(i64::deserialize(deserializer)?)
}

pub(crate) mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub(crate) fn serialize<S: Serializer>(labels: &[Option<usize>], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(labels.len()))?;
        for l in labels {
            seq.serialize_element(&l.map_or(-1, |l| l as i64))?;
        }
        seq.end()
    }

    pub(crate) fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<Option<usize>>, D::Error> {
        Vec::<i64>::deserialize(deserializer)?
            .into_iter()
            .map(decode::<D::Error>)
            .collect()
    }
}
