//! External-process model: `sh -c <command>` reading one `{"prompt": ...}`
//! line per request on stdin and answering one `{"text": ...}` line on
//! stdout.

use std::cell::RefCell;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use reviewlens_core::adapter::GenerativeModel;
use reviewlens_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Serialize)]
struct Request<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct Response {
    text: String,
}

struct Pipes {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

pub struct ExecModel {
    child: Child,
    pipes: RefCell<Pipes>,
}

fn model_err(msg: impl std::fmt::Display) -> Error {
    Error::Model(msg.to_string())
}

impl ExecModel {
    pub fn spawn(command: &str) -> Result<Self, Error> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| model_err(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().ok_or_else(|| model_err("no stdin"))?;
        let stdout = BufReader::new(child.stdout.take().ok_or_else(|| model_err("no stdout"))?);
        Ok(Self {
            child,
            pipes: RefCell::new(Pipes { stdin, stdout }),
        })
    }
}

impl GenerativeModel for ExecModel {
    fn generate(&self, prompt: &str) -> Result<String, Error> {
        let mut pipes = self.pipes.borrow_mut();
        let mut line = serde_json::to_string(&Request { prompt }).map_err(model_err)?;
        line.push('\n');
        pipes.stdin.write_all(line.as_bytes()).map_err(model_err)?;
        pipes.stdin.flush().map_err(model_err)?;
        let mut answer = String::new();
        if pipes.stdout.read_line(&mut answer).map_err(model_err)? == 0 {
            return Err(model_err("model process closed its output"));
        }
        let r: Response = serde_json::from_str(&answer).map_err(|e| model_err(format!("bad response {answer:?}: {e}")))?;
        Ok(r.text)
    }
}

impl Drop for ExecModel {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// At most one process per concurrently running worker. A process that
/// failed is discarded rather than reused.
pub struct ExecPool {
    command: String,
    idle: Mutex<Vec<ExecModel>>,
}

impl ExecPool {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            idle: Mutex::new(Vec::new()),
        }
    }

    pub fn with_model<T>(&self, f: impl FnOnce(&ExecModel) -> Result<T, Error>) -> Result<T, Error> {
        let taken = self.idle.lock().unwrap_or_else(|p| p.into_inner()).pop();
        let model = match taken {
            Some(m) => m,
            None => ExecModel::spawn(&self.command)?,
        };
        let out = f(&model);
        if out.is_ok() {
            self.idle.lock().unwrap_or_else(|p| p.into_inner()).push(model);
        }
        out
    }
}
