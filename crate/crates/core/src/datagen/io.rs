//! JSONL task files, one task per line:
//!
//! ```json
//! {"text": ["given", ...], "args": [{"name": "a", "type": "int[]"}],
//!  "short_tree": "(reduce a 0 +)", "tests": [{"input": [[1, 2]], "output": 3}]}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::split::DatasetSplit;
use super::Task;
use crate::dsl::{parse_typed, ArgDecl};
use crate::interp::{TestCase, Value};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Record { path: PathBuf, line: usize, msg: String },
}

#[derive(Serialize, Deserialize)]
struct TestRecord {
    input: Vec<Json>,
    output: Json,
}

#[derive(Serialize, Deserialize)]
struct TaskRecord {
    text: Vec<String>,
    args: Vec<ArgDecl>,
    short_tree: String,
    tests: Vec<TestRecord>,
}

pub fn task_to_json(task: &Task) -> String {
    let rec = TaskRecord {
        text: task.text.clone(),
        args: task.args.to_vec(),
        short_tree: task.surface_form.clone(),
        tests: task
            .tests
            .iter()
            .map(|t| TestRecord { input: t.inputs.iter().map(Value::to_json).collect(), output: t.output.to_json() })
            .collect(),
    };
    serde_json::to_string(&rec).expect("task records serialize")
}

/// Parses one record. The output type is taken from the program.
pub fn task_from_json(line: &str) -> Result<Task, String> {
    let rec: TaskRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let program = parse_typed(&rec.short_tree, &rec.args, None).map_err(|e| format!("short_tree: {e}"))?;
    let ret = program.result_type();
    if !ret.is_ground() {
        return Err(format!("short_tree has no definite type ({ret})"));
    }
    let mut tests = Vec::with_capacity(rec.tests.len());
    for (i, t) in rec.tests.iter().enumerate() {
        if t.input.len() != rec.args.len() {
            return Err(format!("test {i}: {} inputs for {} arguments", t.input.len(), rec.args.len()));
        }
        let inputs = t
            .input
            .iter()
            .zip(&rec.args)
            .map(|(j, a)| Value::from_json(j, &a.ty))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("test {i}: {e}"))?;
        let output = Value::from_json(&t.output, &ret).map_err(|e| format!("test {i}: {e}"))?;
        tests.push(TestCase { inputs, output });
    }
    Ok(Task::new(rec.text, rec.args, program, tests))
}

pub fn write_tasks(path: &Path, tasks: &[Task]) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for t in tasks {
        writeln!(w, "{}", task_to_json(t)).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_tasks(path: &Path) -> Result<Vec<Task>, DatasetError> {
    let io = |source| DatasetError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let task =
            task_from_json(&line).map_err(|msg| DatasetError::Record { path: path.to_path_buf(), line: i + 1, msg })?;
        out.push(task);
    }
    Ok(out)
}

/// Writes `train.jsonl`, `dev.jsonl` and `test.jsonl` under `dir`.
pub fn write_dataset(split: &DatasetSplit, dir: &Path) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir).map_err(|source| DatasetError::Io { path: dir.to_path_buf(), source })?;
    for (name, tasks) in split.parts() {
        write_tasks(&dir.join(format!("{name}.jsonl")), tasks)?;
    }
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<DatasetSplit, DatasetError> {
    Ok(DatasetSplit {
        train: read_tasks(&dir.join("train.jsonl"))?,
        dev: read_tasks(&dir.join("dev.jsonl"))?,
        test: read_tasks(&dir.join("test.jsonl"))?,
    })
}
