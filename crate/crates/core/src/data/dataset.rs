use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::schema::FeatureInfo;
use crate::error::{Error, Result};

/// One party's slice of the data: rows are samples, columns are features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartyDataset {
    pub party: String,
    pub ids: Vec<String>,
    pub features: Matrix,
    pub feature_info: Vec<FeatureInfo>,
    pub labels: Option<Vec<u8>>,
}

impl PartyDataset {
    pub fn new(
        party: impl Into<String>,
        ids: Vec<String>,
        features: Matrix,
        feature_info: Vec<FeatureInfo>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let ds = PartyDataset {
            party: party.into(),
            ids,
            features,
            feature_info,
            labels,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.n_rows();
        if self.ids.len() != n {
            return Err(Error::Data(format!(
                "{}: {} ids for {n} rows",
                self.party,
                self.ids.len()
            )));
        }
        if self.feature_info.len() != self.features.n_cols() {
            return Err(Error::Data(format!(
                "{}: {} feature descriptors for {} columns",
                self.party,
                self.feature_info.len(),
                self.features.n_cols()
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(Error::Data(format!(
                    "{}: {} labels for {n} rows",
                    self.party,
                    labels.len()
                )));
            }
            if let Some(bad) = labels.iter().position(|&y| y > 1) {
                return Err(Error::Data(format!(
                    "{}: label at row {bad} is not 0/1",
                    self.party
                )));
            }
        }
        for i in 0..n {
            if let Some(j) = self.features.row(i).iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "{}: missing or non-finite value at row {i}, feature {}",
                    self.party, self.feature_info[j].symbol
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn symbols(&self) -> Vec<&str> {
        self.feature_info.iter().map(|f| f.symbol.as_str()).collect()
    }

    pub fn labels(&self) -> Result<&[u8]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Data(format!("{} holds no labels", self.party)))
    }

    pub fn select_rows(&self, idx: &[usize]) -> PartyDataset {
        PartyDataset {
            party: self.party.clone(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.select_rows(idx),
            feature_info: self.feature_info.clone(),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn select_features(&self, cols: &[usize]) -> PartyDataset {
        PartyDataset {
            party: self.party.clone(),
            ids: self.ids.clone(),
            features: self.features.select_cols(cols),
            feature_info: cols.iter().map(|&j| self.feature_info[j].clone()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn without_labels(&self) -> PartyDataset {
        PartyDataset {
            labels: None,
            ..self.clone()
        }
    }

    /// Concatenates samples of datasets sharing a schema.
    pub fn concat(party: &str, parts: &[&PartyDataset]) -> Result<PartyDataset> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Data("nothing to concatenate".into()))?;
        let symbols = first.symbols();
        let mut features = Matrix::zeros(0, first.n_features());
        let mut ids = Vec::new();
        let mut labels = first.labels.as_ref().map(|_| Vec::new());
        for p in parts {
            if p.symbols() != symbols {
                return Err(Error::Data(format!(
                    "schema of {} differs from {}",
                    p.party, first.party
                )));
            }
            features = features.vstack(&p.features)?;
            ids.extend(p.ids.iter().cloned());
            match (&mut labels, &p.labels) {
                (Some(acc), Some(l)) => acc.extend_from_slice(l),
                (None, None) => {}
                _ => return Err(Error::Data("mixed labeled and unlabeled parts".into())),
            }
        }
        PartyDataset::new(party, ids, features, first.feature_info.clone(), labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::FeatureInfo;

    fn tiny() -> PartyDataset {
        PartyDataset::new(
            "p",
            vec!["a".into(), "b".into()],
            Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
            vec![FeatureInfo::plain("x"), FeatureInfo::plain("y")],
            Some(vec![0, 1]),
        )
        .unwrap()
    }

    #[test]
    fn rejects_missing_values_and_bad_labels() {
        let mut d = tiny();
        d.features.set(1, 0, f64::NAN);
        assert!(d.validate().is_err());
        let mut d = tiny();
        d.labels = Some(vec![0, 2]);
        assert!(d.validate().is_err());
    }

    #[test]
    fn concat_checks_schema() {
        let d = tiny();
        let both = PartyDataset::concat("u", &[&d, &d]).unwrap();
        assert_eq!(both.len(), 4);
        assert_eq!(both.labels.unwrap(), vec![0, 1, 0, 1]);
        let other = d.select_features(&[1]);
        assert!(PartyDataset::concat("u", &[&d, &other]).is_err());
    }
}
