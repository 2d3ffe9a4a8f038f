//! Vehicle repository backends.
//!
//! The on-disk format is one record per line, `plate|color|make|model|owner_ref`,
//! UTF-8. Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use super::{PlateGrammar, PlateId, RegistryError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub plate: PlateId,
    pub color: String,
    pub make: String,
    pub model: String,
    pub owner_ref: String,
}

impl VehicleRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}",
            self.plate, self.color, self.make, self.model, self.owner_ref
        )
    }
}

pub trait VehicleRepository: Send + Sync {
    fn lookup(&self, plate: &PlateId) -> Result<VehicleRecord, RegistryError>;
}

/// In-memory repository. Can be switched offline to simulate an outage.
#[derive(Debug, Default)]
pub struct MemoryVehicleRepository {
    records: BTreeMap<PlateId, VehicleRecord>,
    offline: AtomicBool,
}

impl MemoryVehicleRepository {
    pub fn new(records: impl IntoIterator<Item = VehicleRecord>) -> Self {
        Self {
            records: records.into_iter().map(|r| (r.plate.clone(), r)).collect(),
            offline: AtomicBool::new(false),
        }
    }

    pub fn set_offline(&self, offline: bool) {
        self.offline.store(offline, Ordering::SeqCst);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl VehicleRepository for MemoryVehicleRepository {
    fn lookup(&self, plate: &PlateId) -> Result<VehicleRecord, RegistryError> {
        if self.offline.load(Ordering::SeqCst) {
            return Err(RegistryError::BackendUnavailable("repository offline".into()));
        }
        self.records
            .get(plate)
            .cloned()
            .ok_or_else(|| RegistryError::NotFound(plate.clone()))
    }
}

/// Repository loaded from a pipe-delimited text file.
#[derive(Debug)]
pub struct FileVehicleRepository {
    inner: MemoryVehicleRepository,
}

impl FileVehicleRepository {
    pub fn open(path: impl AsRef<Path>, grammar: &PlateGrammar) -> Result<Self, RegistryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RegistryError::BackendUnavailable(format!("{}: {e}", path.display())))?;
        Self::parse(&text, grammar)
    }

    pub fn parse(text: &str, grammar: &PlateGrammar) -> Result<Self, RegistryError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let bad = |reason: String| RegistryError::RepositoryFormat { line: i + 1, reason };
            let fields: Vec<&str> = line.split('|').collect();
            let [plate, color, make, model, owner_ref] = fields[..] else {
                return Err(bad(format!("expected 5 fields, found {}", fields.len())));
            };
            let plate = grammar.normalize(plate).map_err(|e| bad(e.to_string()))?;
            records.push(VehicleRecord {
                plate,
                color: color.trim().to_string(),
                make: make.trim().to_string(),
                model: model.trim().to_string(),
                owner_ref: owner_ref.trim().to_string(),
            });
        }
        Ok(Self {
            inner: MemoryVehicleRepository::new(records),
        })
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }
}

impl VehicleRepository for FileVehicleRepository {
    fn lookup(&self, plate: &PlateId) -> Result<VehicleRecord, RegistryError> {
        self.inner.lookup(plate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::normalize_plate;

    const FILE: &str = "\
# plate|color|make|model|owner
abc 123|white|Toyota|Corolla|61101-1111111-1

LEA-9|black|Honda|Civic|owner-2
";

    #[test]
    fn parses_and_looks_up() {
        let repo = FileVehicleRepository::parse(FILE, &PlateGrammar::default()).unwrap();
        assert_eq!(repo.len(), 2);
        let rec = repo.lookup(&normalize_plate("ABC-123").unwrap()).unwrap();
        assert_eq!(rec.make, "Toyota");
        assert_eq!(rec.to_line(), "ABC-123|white|Toyota|Corolla|61101-1111111-1");
        let missing = normalize_plate("ZZ-1").unwrap();
        assert_eq!(repo.lookup(&missing), Err(RegistryError::NotFound(missing)));
    }

    #[test]
    fn rejects_malformed_lines() {
        let err = FileVehicleRepository::parse("AB-1|red|x\n", &PlateGrammar::default()).unwrap_err();
        assert!(matches!(err, RegistryError::RepositoryFormat { line: 1, .. }));
        let err =
            FileVehicleRepository::parse("ok\n1-AB|r|m|m|o\n", &PlateGrammar::default()).unwrap_err();
        assert!(matches!(err, RegistryError::RepositoryFormat { line: 1, .. }));
    }

    #[test]
    fn missing_file_is_unavailable() {
        let err = FileVehicleRepository::open("/nonexistent/vehicles.txt", &PlateGrammar::default())
            .unwrap_err();
        assert!(matches!(err, RegistryError::BackendUnavailable(_)));
    }

    #[test]
    fn offline_memory_backend() {
        let plate = normalize_plate("AB-1").unwrap();
        let repo = MemoryVehicleRepository::new([VehicleRecord {
            plate: plate.clone(),
            color: "red".into(),
            make: "Suzuki".into(),
            model: "Alto".into(),
            owner_ref: "o".into(),
        }]);
        assert!(repo.lookup(&plate).is_ok());
        repo.set_offline(true);
        assert!(matches!(repo.lookup(&plate), Err(RegistryError::BackendUnavailable(_))));
    }
}
