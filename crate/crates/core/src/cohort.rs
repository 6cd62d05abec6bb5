//! Longitudinal region-volume tables.
//!
//! Input is a long-format CSV with one measurement per row:
//!
//! ```text
//! patient_id,group,timepoint,region,volume_mm3
//! P001,AD,T0,Left-Hippocampus,3571.2
//! ```
//!
//! Regions and patients are ordered lexicographically at parse time and every
//! matrix downstream indexes by that region order. Bad measurements are kept
//! and flagged rather than dropped so that validity can be decided per group.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER: [&str; 5] = ["patient_id", "group", "timepoint", "region", "volume_mm3"];

/// Diagnostic group. Declaration order is the fixed class order used by the
/// classifier (AD, CN, MCI).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "AD")]
    Ad,
    #[serde(rename = "CN")]
    Cn,
    #[serde(rename = "MCI")]
    Mci,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Ad, Group::Cn, Group::Mci];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Ad => "AD",
            Group::Cn => "CN",
            Group::Mci => "MCI",
        }
    }

    /// Position in the fixed class order.
    pub fn class_index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "AD" => Ok(Group::Ad),
            "MCI" => Ok(Group::Mci),
            "CN" => Ok(Group::Cn),
            other => Err(format!("unknown group label {other:?} (expected AD, MCI or CN)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Timepoint {
    T0,
    T1,
}

impl Timepoint {
    pub fn as_str(self) -> &'static str {
        match self {
            Timepoint::T0 => "T0",
            Timepoint::T1 => "T1",
        }
    }
}

impl FromStr for Timepoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "T0" => Ok(Timepoint::T0),
            "T1" => Ok(Timepoint::T1),
            other => Err(format!("unknown timepoint {other:?} (expected T0 or T1)")),
        }
    }
}

/// One row of the input table. `volume` is `None` when the cell is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeRecord {
    pub patient_id: String,
    pub group: Group,
    pub timepoint: Timepoint,
    pub region: String,
    pub volume: Option<f64>,
}

impl VolumeRecord {
    pub fn is_usable(&self) -> bool {
        usable(self.volume)
    }
}

fn usable(v: Option<f64>) -> bool {
    matches!(v, Some(x) if x.is_finite() && x > 0.0)
}

/// A patient's two scans, indexed by the dataset's region order.
#[derive(Clone, Debug, PartialEq)]
pub struct Patient {
    pub id: String,
    pub group: Group,
    pub t0: Vec<Option<f64>>,
    pub t1: Vec<Option<f64>>,
}

impl Patient {
    /// Both timepoints present and strictly positive.
    pub fn region_valid(&self, region: usize) -> bool {
        usable(self.t0[region]) && usable(self.t1[region])
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CohortDataset {
    pub patients: Vec<Patient>,
    pub regions: Vec<String>,
    pub group_sizes: BTreeMap<Group, usize>,
}

impl CohortDataset {
    /// Assembles a dataset, sorting regions and patients and re-indexing
    /// volumes to the sorted region order.
    pub fn new(mut patients: Vec<Patient>, regions: Vec<String>) -> Result<Self> {
        let d = regions.len();
        for p in &patients {
            if p.t0.len() != d || p.t1.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.t0.len().min(p.t1.len()),
                });
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| regions[a].cmp(&regions[b]));
        let regions: Vec<String> = order.iter().map(|&i| regions[i].clone()).collect();
        if regions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate region name".into()));
        }
        for p in &mut patients {
            p.t0 = order.iter().map(|&i| p.t0[i]).collect();
            p.t1 = order.iter().map(|&i| p.t1[i]).collect();
        }
        patients.sort_by(|a, b| a.id.cmp(&b.id));
        if patients.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::Config("duplicate patient id".into()));
        }
        let mut group_sizes = BTreeMap::new();
        for p in &patients {
            *group_sizes.entry(p.group).or_insert(0) += 1;
        }
        Ok(Self {
            patients,
            regions,
            group_sizes,
        })
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn num_patients(&self) -> usize {
        self.patients.len()
    }

    pub fn group_size(&self, g: Group) -> usize {
        self.group_sizes.get(&g).copied().unwrap_or(0)
    }

    pub fn patients_in(&self, g: Group) -> impl Iterator<Item = (usize, &Patient)> {
        self.patients
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.group == g)
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.binary_search_by(|r| r.as_str().cmp(name)).ok()
    }
}

/// Regions usable in every group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidNodeSet {
    pub indices: Vec<usize>,
    pub per_group_valid: BTreeMap<Group, BTreeSet<usize>>,
}

impl ValidNodeSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Parses the long-format volume table.
pub fn parse_volume_table<R: Read>(reader: R) -> Result<CohortDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(1, e))?,
        None => return Err(Error::parse(1, "missing header row")),
    };
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::parse(
            1,
            format!("header must be exactly `{}`", HEADER.join(",")),
        ));
    }

    struct Pending {
        group: Group,
        t0: HashMap<String, Option<f64>>,
        t1: HashMap<String, Option<f64>>,
    }

    let mut patients: BTreeMap<String, Pending> = BTreeMap::new();
    let mut regions: BTreeSet<String> = BTreeSet::new();

    for rec in records {
        let rec = rec.map_err(|e| csv_error(0, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != HEADER.len() {
            return Err(Error::parse(
                line,
                format!("expected {} columns, found {}", HEADER.len(), rec.len()),
            ));
        }
        let record = parse_record(&rec).map_err(|m| Error::parse(line, m))?;
        let entry = patients
            .entry(record.patient_id.clone())
            .or_insert_with(|| Pending {
                group: record.group,
                t0: HashMap::new(),
                t1: HashMap::new(),
            });
        if entry.group != record.group {
            return Err(Error::parse(
                line,
                format!(
                    "patient {} listed under both {} and {}",
                    record.patient_id, entry.group, record.group
                ),
            ));
        }
        let slot = match record.timepoint {
            Timepoint::T0 => &mut entry.t0,
            Timepoint::T1 => &mut entry.t1,
        };
        if slot.contains_key(&record.region) {
            return Err(Error::DuplicateRecord {
                line,
                patient_id: record.patient_id,
                timepoint: record.timepoint.as_str().into(),
                region: record.region,
            });
        }
        regions.insert(record.region.clone());
        slot.insert(record.region, record.volume);
    }

    let regions: Vec<String> = regions.into_iter().collect();
    let mut out = Vec::with_capacity(patients.len());
    for (id, p) in patients {
        if p.t0.is_empty() || p.t1.is_empty() {
            return Err(Error::IncompletePatient(id));
        }
        let lookup = |m: &HashMap<String, Option<f64>>| -> Vec<Option<f64>> {
            regions.iter().map(|r| m.get(r).copied().flatten()).collect()
        };
        out.push(Patient {
            t0: lookup(&p.t0),
            t1: lookup(&p.t1),
            id,
            group: p.group,
        });
    }
    CohortDataset::new(out, regions)
}

fn parse_record(rec: &csv::StringRecord) -> Result<VolumeRecord, String> {
    let patient_id = rec[0].to_string();
    if patient_id.is_empty() {
        return Err("empty patient_id".into());
    }
    let group = rec[1].parse::<Group>()?;
    let timepoint = rec[2].parse::<Timepoint>()?;
    let region = rec[3].to_string();
    if region.is_empty() {
        return Err("empty region name".into());
    }
    let raw = rec[4].trim();
    let volume = if raw.is_empty() {
        None
    } else {
        Some(
            raw.parse::<f64>()
                .map_err(|_| format!("unparsable volume {raw:?}"))?,
        )
    };
    Ok(VolumeRecord {
        patient_id,
        group,
        timepoint,
        region,
        volume,
    })
}

fn csv_error(line: usize, e: csv::Error) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    Error::parse(line, e.to_string())
}

/// Writes the dataset in the input format. Missing measurements are written
/// as an empty volume cell, so parsing the output reproduces the dataset.
pub fn write_volume_table<W: Write>(dataset: &CohortDataset, mut out: W) -> Result<()> {
    writeln!(out, "{}", HEADER.join(","))?;
    for p in &dataset.patients {
        for (tp, vols) in [(Timepoint::T0, &p.t0), (Timepoint::T1, &p.t1)] {
            for (region, v) in dataset.regions.iter().zip(vols.iter()) {
                write!(out, "{},{},{},{},", p.id, p.group, tp.as_str(), region)?;
                if let Some(v) = v {
                    write!(out, "{v}")?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

/// A region is valid for a group iff every patient of that group has
/// positive volumes for it at both timepoints; the global set is the
/// intersection over the three groups.
pub fn compute_valid_nodes(dataset: &CohortDataset) -> Result<ValidNodeSet> {
    if dataset.patients.is_empty() {
        return Err(Error::Config("dataset has no patients".into()));
    }
    let d = dataset.num_regions();
    let mut per_group_valid = BTreeMap::new();
    for g in Group::ALL {
        if dataset.group_size(g) == 0 {
            return Err(Error::EmptyGroup(g.to_string()));
        }
        let valid: BTreeSet<usize> = (0..d)
            .filter(|&r| dataset.patients_in(g).all(|(_, p)| p.region_valid(r)))
            .collect();
        per_group_valid.insert(g, valid);
    }
    let indices = (0..d)
        .filter(|r| per_group_valid.values().all(|s: &BTreeSet<usize>| s.contains(r)))
        .collect();
    Ok(ValidNodeSet {
        indices,
        per_group_valid,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CohortSummary {
    pub patients: usize,
    pub group_counts: BTreeMap<Group, usize>,
    pub regions: usize,
    /// `None` when validity is undefined (no patients or an empty group).
    pub valid_nodes: Option<usize>,
}

pub fn summarize_cohort(dataset: &CohortDataset) -> CohortSummary {
    let mut group_counts: BTreeMap<Group, usize> = Group::ALL.iter().map(|&g| (g, 0)).collect();
    for p in &dataset.patients {
        *group_counts.entry(p.group).or_default() += 1;
    }
    CohortSummary {
        patients: dataset.patients.len(),
        group_counts,
        regions: dataset.num_regions(),
        valid_nodes: compute_valid_nodes(dataset).ok().map(|v| v.len()),
    }
}

impl fmt::Display for CohortSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "patients: {}", self.patients)?;
        for (g, n) in &self.group_counts {
            writeln!(f, "  {g}: {n}")?;
        }
        writeln!(f, "regions: {}", self.regions)?;
        match self.valid_nodes {
            Some(v) => write!(f, "valid nodes: {v}"),
            None => write!(f, "valid nodes: n/a"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "patient_id,group,timepoint,region,volume_mm3
p2,CN,T0,b,10
p2,CN,T1,b,11
p2,CN,T0,a,20
p2,CN,T1,a,19
p1,AD,T0,a,100
p1,AD,T1,a,90
p1,AD,T0,b,50
p1,AD,T1,b,40
";

    fn three_group(extra: &str) -> String {
        let mut s = HEADER.join(",");
        s.push('\n');
        for (id, g) in [("a1", "AD"), ("a2", "AD"), ("m1", "MCI"), ("c1", "CN")] {
            for tp in ["T0", "T1"] {
                for r in ["r0", "r1", "r2", "r3"] {
                    s.push_str(&format!("{id},{g},{tp},{r},100\n"));
                }
            }
        }
        s.push_str(extra);
        s
    }

    #[test]
    fn minimal_table_parses_sorted() {
        let ds = parse_volume_table(TOY.as_bytes()).unwrap();
        assert_eq!(ds.num_patients(), 2);
        assert_eq!(ds.regions, ["a", "b"]);
        assert_eq!(ds.patients[0].id, "p1");
        assert_eq!(ds.patients[0].t1, vec![Some(90.0), Some(40.0)]);
        assert_eq!(ds.patients[1].t0, vec![Some(20.0), Some(10.0)]);
        assert_eq!(ds.group_size(Group::Ad), 1);
        assert_eq!(ds.group_size(Group::Cn), 1);
    }

    #[test]
    fn negative_volume_is_kept_but_invalid() {
        let text = TOY.replace("p1,AD,T1,b,40", "p1,AD,T1,b,-5.0");
        let ds = parse_volume_table(text.as_bytes()).unwrap();
        assert_eq!(ds.patients[0].t1[1], Some(-5.0));
        assert!(!ds.patients[0].region_valid(1));
        assert!(ds.patients[0].region_valid(0));
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let text = TOY.replace("p2,CN,T0,a,20", "p2,CN,T0,a");
        match parse_volume_table(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unparsable_number_reports_line() {
        let text = TOY.replace("p1,AD,T0,b,50", "p1,AD,T0,b,5o");
        match parse_volume_table(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 8);
                assert!(message.contains("5o"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = format!("{TOY}p1,AD,T0,a,101\n");
        assert!(matches!(
            parse_volume_table(text.as_bytes()),
            Err(Error::DuplicateRecord { line: 10, .. })
        ));
    }

    #[test]
    fn single_timepoint_patient_rejected() {
        let text = format!("{TOY}p3,MCI,T0,a,101\n");
        assert!(matches!(
            parse_volume_table(text.as_bytes()),
            Err(Error::IncompletePatient(id)) if id == "p3"
        ));
    }

    #[test]
    fn unknown_group_and_header_rejected() {
        let text = TOY.replace("p2,CN,T0,b,10", "p2,XX,T0,b,10");
        assert!(matches!(parse_volume_table(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let text = TOY.replace("volume_mm3", "volume");
        assert!(matches!(parse_volume_table(text.as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(parse_volume_table("".as_bytes()).is_err());
    }

    #[test]
    fn all_positive_gives_all_regions() {
        let ds = parse_volume_table(three_group("").as_bytes()).unwrap();
        let v = compute_valid_nodes(&ds).unwrap();
        assert_eq!(v.indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn missing_t1_removes_region_from_group_and_intersection() {
        let text = three_group("").replace("a2,AD,T1,r3,100\n", "");
        let ds = parse_volume_table(text.as_bytes()).unwrap();
        let v = compute_valid_nodes(&ds).unwrap();
        assert_eq!(v.indices, vec![0, 1, 2]);
        assert!(!v.per_group_valid[&Group::Ad].contains(&3));
        assert!(v.per_group_valid[&Group::Mci].contains(&3));
        assert!(v.per_group_valid[&Group::Cn].contains(&3));
    }

    #[test]
    fn empty_group_is_an_error() {
        let ds = parse_volume_table(TOY.as_bytes()).unwrap();
        assert!(matches!(compute_valid_nodes(&ds), Err(Error::EmptyGroup(g)) if g == "MCI"));
    }

    #[test]
    fn summaries() {
        let empty = summarize_cohort(&CohortDataset::default());
        assert_eq!(empty.patients, 0);
        assert_eq!(empty.valid_nodes, None);

        let toy = summarize_cohort(&parse_volume_table(TOY.as_bytes()).unwrap());
        assert_eq!(toy.patients, 2);
        assert_eq!(toy.regions, 2);
        assert!(toy.to_string().contains("patients: 2"));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let text = three_group("").replace("m1,MCI,T1,r2,100", "m1,MCI,T1,r2,-3.25");
        let ds = parse_volume_table(text.replace("c1,CN,T0,r1,100\n", "").as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_volume_table(&ds, &mut buf).unwrap();
        let again = parse_volume_table(buf.as_slice()).unwrap();
        assert_eq!(ds, again);
    }
}
