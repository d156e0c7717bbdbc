//! Switching-annotated survival datasets and their CSV form.
//!
//! The CSV header is fixed:
//!
//! ```text
//! id,arm,observed_time,event,censor_time,age,ecog,prior_lines,risk_level,switch_time,switch_level
//! ```
//!
//! `arm` is `control` or `treatment`, `event` is `0`/`1`, and the two switch
//! columns are empty for non-switchers. Both switch columns may be omitted
//! together when a file carries no switching information. Times are written
//! with the shortest representation that round-trips exactly.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 11] = [
    "id",
    "arm",
    "observed_time",
    "event",
    "censor_time",
    "age",
    "ecog",
    "prior_lines",
    "risk_level",
    "switch_time",
    "switch_level",
];

const SWITCH_COLUMNS: [&str; 2] = ["switch_time", "switch_level"];

/// Highest ordinal risk category.
pub const MAX_RISK_LEVEL: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Control,
    Treatment,
}

impl Arm {
    /// Group index used by the survival kernels: control 0, treatment 1.
    pub fn group(self) -> usize {
        match self {
            Arm::Control => 0,
            Arm::Treatment => 1,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "control" => Some(Arm::Control),
            "treatment" => Some(Arm::Treatment),
            _ => None,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Control => "control",
            Arm::Treatment => "treatment",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    pub age: f64,
    pub ecog: f64,
    pub prior_lines: u32,
    pub risk_level: u8,
}

impl Covariates {
    pub const NAMES: [&'static str; 4] = ["age", "ecog", "prior_lines", "risk_level"];

    pub fn as_features(&self) -> [f64; 4] {
        [
            self.age,
            self.ecog,
            f64::from(self.prior_lines),
            f64::from(self.risk_level),
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.as_features()[i])
    }
}

/// Crossover from the control arm to another therapy.
///
/// Level 1 is the experimental treatment or an equivalent one; higher levels
/// are other therapies with their own effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchAnnotation {
    pub time: f64,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: String,
    pub arm: Arm,
    pub observed_time: f64,
    pub event: bool,
    /// Independent censoring horizon, known for every patient.
    pub censor_time: f64,
    pub covariates: Covariates,
    pub switch: Option<SwitchAnnotation>,
}

impl PatientRecord {
    pub fn is_switcher(&self) -> bool {
        self.switch.is_some()
    }

    /// Time on control therapy and time on switched therapy.
    ///
    /// The two parts are nonnegative and always sum to `observed_time`.
    pub fn split_exposure(&self) -> (f64, f64) {
        split_exposure(self)
    }

    fn validate(&self) -> Result<()> {
        let row = &self.id;
        if !(self.observed_time > 0.0 && self.observed_time.is_finite()) {
            return Err(Error::row(row, "observed_time must be a positive finite number"));
        }
        if self.censor_time.is_nan() || self.censor_time <= 0.0 {
            return Err(Error::row(row, "censor_time must be positive"));
        }
        if self.observed_time > self.censor_time {
            return Err(Error::row(row, "observed_time exceeds censor_time"));
        }
        if !self.event && self.observed_time != self.censor_time {
            return Err(Error::row(
                row,
                "censored record must have observed_time equal to censor_time",
            ));
        }
        let c = &self.covariates;
        if !(c.age >= 18.0) || !c.age.is_finite() {
            return Err(Error::row(row, "age must be at least 18"));
        }
        if !(c.ecog >= 0.0) || !c.ecog.is_finite() {
            return Err(Error::row(row, "ecog must be nonnegative"));
        }
        if c.risk_level > MAX_RISK_LEVEL {
            return Err(Error::row(row, "risk_level must be 0, 1 or 2"));
        }
        if let Some(sw) = self.switch {
            if self.arm != Arm::Control {
                return Err(Error::row(row, "only control-arm patients may switch"));
            }
            if !(sw.time > 0.0) {
                return Err(Error::row(row, "switch_time must be positive"));
            }
            if sw.time >= self.observed_time {
                return Err(Error::row(row, "switch_time must precede observed_time (switch after death)"));
            }
            if sw.level < 1 {
                return Err(Error::row(row, "unknown switch level 0 (levels start at 1)"));
            }
        }
        Ok(())
    }
}

/// Exposure split of the observed time into control and switched parts.
pub fn split_exposure(p: &PatientRecord) -> (f64, f64) {
    match (p.arm, p.switch) {
        (Arm::Treatment, _) => (0.0, p.observed_time),
        (Arm::Control, None) => (p.observed_time, 0.0),
        (Arm::Control, Some(sw)) => (sw.time, p.observed_time - sw.time),
    }
}

/// An immutable, validated collection of patients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    patients: Vec<PatientRecord>,
    k_levels: u32,
}

impl Dataset {
    /// Validates every record. `k_levels` becomes the highest switch level
    /// present, so levels are `1..=k_levels`.
    pub fn new(patients: Vec<PatientRecord>) -> Result<Self> {
        for p in &patients {
            p.validate()?;
        }
        let k_levels = patients
            .iter()
            .filter_map(|p| p.switch.map(|s| s.level))
            .max()
            .unwrap_or(0);
        Ok(Dataset { patients, k_levels })
    }

    pub fn patients(&self) -> &[PatientRecord] {
        &self.patients
    }

    pub fn into_patients(self) -> Vec<PatientRecord> {
        self.patients
    }

    pub fn k_levels(&self) -> u32 {
        self.k_levels
    }

    pub fn len(&self) -> usize {
        self.patients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patients.is_empty()
    }

    pub fn arm_count(&self, arm: Arm) -> usize {
        self.patients.iter().filter(|p| p.arm == arm).count()
    }

    pub fn n_switchers(&self) -> usize {
        self.patients.iter().filter(|p| p.is_switcher()).count()
    }

    pub fn n_switchers_at(&self, level: u32) -> usize {
        self.patients
            .iter()
            .filter(|p| p.switch.is_some_and(|s| s.level == level))
            .count()
    }

    /// Same patients with every switch annotation removed.
    pub fn without_switching(&self) -> Dataset {
        let patients = self
            .patients
            .iter()
            .cloned()
            .map(|mut p| {
                p.switch = None;
                p
            })
            .collect();
        Dataset {
            patients,
            k_levels: 0,
        }
    }

    /// Hex SHA-256 of the canonical CSV serialization.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        write_csv(self, &mut buf).expect("writing to memory cannot fail");
        hex::encode(Sha256::digest(&buf))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
}

pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        DataFormat::Csv => read_csv(file),
    }
}

pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(d, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv<W: Write>(d: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for p in &d.patients {
        let c = &p.covariates;
        let (st, sl) = match p.switch {
            Some(s) => (s.time.to_string(), s.level.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            p.id.clone(),
            p.arm.to_string(),
            p.observed_time.to_string(),
            if p.event { "1" } else { "0" }.to_string(),
            p.censor_time.to_string(),
            c.age.to_string(),
            c.ecog.to_string(),
            c.prior_lines.to_string(),
            c.risk_level.to_string(),
            st,
            sl,
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();

    let mut index = [usize::MAX; 11];
    for (pos, name) in header.iter().enumerate() {
        let Some(slot) = CSV_COLUMNS.iter().position(|c| *c == name) else {
            return Err(Error::Schema(format!("unknown column `{name}`")));
        };
        if index[slot] != usize::MAX {
            return Err(Error::Schema(format!("duplicate column `{name}`")));
        }
        index[slot] = pos;
    }
    let has_switch = SWITCH_COLUMNS.map(|c| {
        let slot = CSV_COLUMNS.iter().position(|x| *x == c).unwrap();
        index[slot] != usize::MAX
    });
    if has_switch[0] != has_switch[1] {
        return Err(Error::Schema(
            "switch_time and switch_level must be present together".into(),
        ));
    }
    for (slot, name) in CSV_COLUMNS.iter().enumerate().take(9) {
        if index[slot] == usize::MAX {
            return Err(Error::Schema(format!("missing column `{name}`")));
        }
    }

    let mut patients = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |slot: usize| -> &str {
            match index[slot] {
                usize::MAX => "",
                i => rec.get(i).unwrap_or(""),
            }
        };
        let id = field(0).to_string();
        let row = if id.is_empty() {
            format!("#{}", line + 1)
        } else {
            id.clone()
        };
        let num = |slot: usize| -> Result<f64> {
            field(slot).parse::<f64>().map_err(|_| {
                Error::row(&row, format!("`{}` is not a number: {:?}", CSV_COLUMNS[slot], field(slot)))
            })
        };
        let int = |slot: usize| -> Result<i64> {
            field(slot).parse::<i64>().map_err(|_| {
                Error::row(&row, format!("`{}` is not an integer: {:?}", CSV_COLUMNS[slot], field(slot)))
            })
        };

        let arm = Arm::parse(field(1))
            .ok_or_else(|| Error::row(&row, format!("arm must be control or treatment, got {:?}", field(1))))?;
        let event = match field(3) {
            "1" => true,
            "0" => false,
            other => return Err(Error::row(&row, format!("event must be 0 or 1, got {other:?}"))),
        };
        let prior_lines = int(7)?;
        if prior_lines < 0 {
            return Err(Error::row(&row, "prior_lines must be nonnegative"));
        }
        let risk_level = int(8)?;
        if !(0..=i64::from(MAX_RISK_LEVEL)).contains(&risk_level) {
            return Err(Error::row(&row, "risk_level must be 0, 1 or 2"));
        }
        let switch = match (field(9), field(10)) {
            ("", "") => None,
            ("", _) | (_, "") => {
                return Err(Error::row(&row, "switch_time and switch_level must both be set or both empty"))
            }
            _ => {
                let level = int(10)?;
                if level < 1 || level > i64::from(u32::MAX) {
                    return Err(Error::row(&row, format!("unknown switch level {level}")));
                }
                Some(SwitchAnnotation {
                    time: num(9)?,
                    level: level as u32,
                })
            }
        };
        let observed_time = num(2)?;
        let censor_time = num(4)?;
        if observed_time < 0.0 || censor_time < 0.0 {
            return Err(Error::row(&row, "negative time"));
        }
        patients.push(PatientRecord {
            id,
            arm,
            observed_time,
            event,
            censor_time,
            covariates: Covariates {
                age: num(5)?,
                ecog: num(6)?,
                prior_lines: prior_lines as u32,
                risk_level: risk_level as u8,
            },
            switch,
        });
    }
    Dataset::new(patients)
}
