use serde::{Deserialize, Serialize};

/// Which party class naturally owns a feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Geological,
    Operational,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub symbol: String,
    pub unit: String,
    pub description: String,
    pub group: FeatureGroup,
}

impl FeatureInfo {
    pub fn plain(symbol: impl Into<String>) -> Self {
        FeatureInfo {
            symbol: symbol.into(),
            unit: "-".into(),
            description: String::new(),
            group: FeatureGroup::Other,
        }
    }
}

const GEOLOGICAL: [(&str, &str); 16] = [
    ("m", "Total horizontal section length (HSL)"),
    ("m", "HSL in section 'Jiancaogou'"),
    ("m", "HSL in section 1"),
    ("m", "HSL in section 2"),
    ("m", "HSL in section 3"),
    ("m", "HSL in section 4"),
    ("m", "HSL in section 5"),
    ("m", "HSL in section 6, 7, 8 and 9"),
    ("m", "Total HSL in section 1 and 3"),
    ("-", "Ordinate of the wellhead"),
    ("-", "Abscissa of the wellhead"),
    ("m", "Middle depth of the well"),
    ("%", "Porosity of reservoir"),
    ("%", "Total organic carbon of reservoir"),
    ("-", "Formation pressure coefficient"),
    ("MPa", "Mean fracture pressure"),
];

const OPERATIONAL: [(&str, &str); 16] = [
    ("m3", "Content of slick water in fracturing fluid"),
    ("m3", "Content of guanidine gum in fracturing fluid"),
    ("m3", "Total content of liquid in fracturing fluid"),
    ("m3", "Total content of quartz sand in fracturing fluid"),
    ("m3", "Average content of quartz sand in fracturing fluid"),
    ("m3", "Average content of quartz sand in sections"),
    ("m3", "Average content of liquid in sections"),
    ("m3", "Average content of liquid in clusters"),
    ("m3", "Content of 30-50 mesh proppant"),
    ("m3", "Content of 40-70 mesh proppant"),
    ("m3", "Content of 70-140 mesh proppant"),
    ("-", "Average ratio of quartz sand"),
    ("-", "Cluster number of perforations"),
    ("MPa", "Mean pump pressure"),
    ("m", "Average length of fracturing stages"),
    ("-", "Fracturing stages"),
];

/// The 32 well features: `G1..G16` (geological) followed by `O1..O16`
/// (operational).
pub fn well_schema() -> Vec<FeatureInfo> {
    let geo = GEOLOGICAL
        .iter()
        .enumerate()
        .map(|(i, (unit, desc))| FeatureInfo {
            symbol: format!("G{}", i + 1),
            unit: unit.to_string(),
            description: desc.to_string(),
            group: FeatureGroup::Geological,
        });
    let op = OPERATIONAL
        .iter()
        .enumerate()
        .map(|(i, (unit, desc))| FeatureInfo {
            symbol: format!("O{}", i + 1),
            unit: unit.to_string(),
            description: desc.to_string(),
            group: FeatureGroup::Operational,
        });
    geo.chain(op).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_of_each_group() {
        let s = well_schema();
        assert_eq!(s.len(), 32);
        assert_eq!(s[0].symbol, "G1");
        assert_eq!(s[31].symbol, "O16");
        let geo = s.iter().filter(|f| f.group == FeatureGroup::Geological).count();
        assert_eq!(geo, 16);
    }
}
