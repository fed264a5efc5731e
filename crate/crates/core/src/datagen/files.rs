//! CSV formats for histories, catalogs, assignments and per-order results.

use crate::error::{Error, Result};
use crate::model::{
    Assignment, DrugCatalog, DrugId, DrugRecord, Location, MachineAssignment, OrderHistory,
    OrderLine, PrescriptionOrder,
};
use crate::picking::OrderRecord;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

/// A CSV file with named columns resolved once from the header.
struct Table {
    path: std::path::PathBuf,
    reader: csv::Reader<File>,
    columns: Vec<usize>,
}

impl Table {
    fn open(path: &Path, wanted: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let header = reader
            .headers()
            .map_err(|source| Error::Csv {
                path: path.to_owned(),
                source,
            })?
            .clone();
        let columns = wanted
            .iter()
            .map(|&name| {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::MissingColumn {
                        path: path.to_owned(),
                        column: name.to_owned(),
                    })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            path: path.to_owned(),
            reader,
            columns,
        })
    }

    /// Calls `row` with the line number and wanted fields of every record.
    fn for_each(mut self, mut row: impl FnMut(u64, &[&str]) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut record).map_err(|source| Error::Csv {
                path: self.path.clone(),
                source,
            })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map_or(0, |p| p.line());
            let mut fields = Vec::with_capacity(self.columns.len());
            for &c in &self.columns {
                fields.push(record.get(c).ok_or_else(|| Error::Parse {
                    path: self.path.clone(),
                    line,
                    message: format!("expected at least {} fields", c + 1),
                })?);
            }
            row(line, &fields)?;
        }
    }
}

fn field<T: FromStr>(path: &Path, line: u64, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_owned(),
        line,
        message: format!("`{raw}` is not a valid {name}"),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

/// Reads `order_id,drug_id,dosage` rows; rows sharing an order id form one
/// order, in order of first appearance.
pub fn read_history(path: &Path) -> Result<OrderHistory> {
    let table = Table::open(path, &["order_id", "drug_id", "dosage"])?;
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut orders: Vec<(u64, Vec<OrderLine>)> = Vec::new();
    table.for_each(|line, f| {
        let order: u64 = field(path, line, "order id", f[0])?;
        let drug: u32 = field(path, line, "drug id", f[1])?;
        let dosage: u32 = field(path, line, "dosage", f[2])?;
        if drug == 0 || dosage == 0 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: "drug id and dosage must be positive".into(),
            });
        }
        let slot = *index.entry(order).or_insert_with(|| {
            orders.push((order, Vec::new()));
            orders.len() - 1
        });
        let lines = &mut orders[slot].1;
        if lines.iter().any(|l| l.drug.value() == drug) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("drug {drug} repeated in order {order}"),
            });
        }
        lines.push(OrderLine {
            drug: DrugId::new(drug),
            dosage,
        });
        Ok(())
    })?;
    let orders = orders
        .into_iter()
        .map(|(id, lines)| PrescriptionOrder::new(id, lines))
        .collect::<Result<_>>()?;
    Ok(OrderHistory::new(orders))
}

pub fn write_history(history: &OrderHistory, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let err = io_err(path);
    writeln!(out, "order_id,drug_id,dosage").map_err(&err)?;
    for order in &history.orders {
        for line in order.lines() {
            writeln!(out, "{},{},{}", order.id, line.drug, line.dosage).map_err(&err)?;
        }
    }
    out.flush().map_err(&err)
}

/// Reads `drug_id,bin_count,demand_frequency`; rows may come in any order
/// but ids must cover `1..=K` exactly once.
pub fn read_catalog(path: &Path) -> Result<DrugCatalog> {
    let table = Table::open(path, &["drug_id", "bin_count", "demand_frequency"])?;
    let mut rows: Vec<(u64, DrugRecord)> = Vec::new();
    table.for_each(|line, f| {
        let id: u32 = field(path, line, "drug id", f[0])?;
        let bin_count: u32 = field(path, line, "bin count", f[1])?;
        let demand_frequency: u64 = field(path, line, "demand frequency", f[2])?;
        if id == 0 || bin_count == 0 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: "drug id and bin count must be positive".into(),
            });
        }
        rows.push((
            line,
            DrugRecord {
                id: DrugId::new(id),
                bin_count,
                demand_frequency,
            },
        ));
        Ok(())
    })?;
    rows.sort_by_key(|(_, r)| r.id);
    for (i, (line, r)) in rows.iter().enumerate() {
        if r.id != DrugId::from_index(i) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: *line,
                message: format!("drug id {} breaks the contiguous range 1..={}", r.id, rows.len()),
            });
        }
    }
    DrugCatalog::new(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn write_catalog(catalog: &DrugCatalog, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let err = io_err(path);
    writeln!(out, "drug_id,bin_count,demand_frequency").map_err(&err)?;
    for r in catalog.records() {
        writeln!(out, "{},{},{}", r.id, r.bin_count, r.demand_frequency).map_err(&err)?;
    }
    out.flush().map_err(&err)
}

/// One row per occupied bin, ordered by machine, side, row, column.
pub fn write_assignment(assignment: &Assignment, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let err = io_err(path);
    writeln!(out, "machine,side,row,col,drug_id").map_err(&err)?;
    for (r, m) in assignment.machines.iter().enumerate() {
        for (loc, drug) in m.slots() {
            writeln!(out, "{},{},{},{},{}", r + 1, loc.side, loc.row, loc.col, drug).map_err(&err)?;
        }
    }
    out.flush().map_err(&err)
}

/// Reads an assignment. The fleet size is `machines` when given, otherwise
/// the largest machine number in the file.
pub fn read_assignment(path: &Path, machines: Option<usize>) -> Result<Assignment> {
    let table = Table::open(path, &["machine", "side", "row", "col", "drug_id"])?;
    let mut fleet: Vec<MachineAssignment> = vec![MachineAssignment::new(); machines.unwrap_or(0)];
    table.for_each(|line, f| {
        let machine: usize = field(path, line, "machine", f[0])?;
        let side: u8 = field(path, line, "side", f[1])?;
        let row: u16 = field(path, line, "row", f[2])?;
        let col: u16 = field(path, line, "col", f[3])?;
        let drug: u32 = field(path, line, "drug id", f[4])?;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        if machine == 0 || drug == 0 || side == 0 || row == 0 || col == 0 {
            return Err(bad("machine, position and drug id are 1-based".into()));
        }
        if machine > fleet.len() {
            if machines.is_some() {
                return Err(bad(format!("machine {machine} outside a fleet of {}", fleet.len())));
            }
            fleet.resize(machine, MachineAssignment::new());
        }
        fleet[machine - 1]
            .place(Location::new(side, row, col), DrugId::new(drug))
            .map_err(|e| bad(e.to_string()))
    })?;
    Ok(Assignment::new(fleet))
}

/// `order_id,machine_count,expected_time_s,penalized_time_s,stockout_flag`.
pub fn write_order_records(records: &[OrderRecord], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let err = io_err(path);
    writeln!(out, "order_id,machine_count,expected_time_s,penalized_time_s,stockout_flag").map_err(&err)?;
    for r in records {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{}",
            r.order_id, r.machine_count, r.expected_time, r.penalized_time, r.stockout as u8
        )
        .map_err(&err)?;
    }
    out.flush().map_err(&err)
}
