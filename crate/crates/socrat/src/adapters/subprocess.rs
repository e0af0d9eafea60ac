//! Line protocol over a child process: one joined input per line on stdin,
//! one output line per input on stdout, an empty line meaning "no output".

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use socrat_core::{tokenize, BlackBox, Error, Response, Scheme, Side, TokenSequence};

struct Proc {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Proc {
    fn spawn(command: &[String]) -> std::io::Result<Proc> {
        let mut child = Command::new(&command[0])
            .args(&command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Proc { child, stdin, lines: rx })
    }
}

impl Drop for Proc {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Requests are serialized through one child; the child is restarted after
/// a failure so that a late answer cannot be attributed to the next input.
pub struct SubprocessBlackBox {
    command: Vec<String>,
    timeout: Duration,
    input_scheme: Scheme,
    output_scheme: Scheme,
    proc: Mutex<Option<Proc>>,
}

impl SubprocessBlackBox {
    pub fn new(command: Vec<String>, timeout: Duration, input_scheme: Scheme, output_scheme: Scheme) -> Self {
        SubprocessBlackBox { command, timeout, input_scheme, output_scheme, proc: Mutex::new(None) }
    }

    fn ask(&self, slot: &mut Option<Proc>, line: &str) -> Result<String, String> {
        if slot.is_none() {
            *slot = Some(Proc::spawn(&self.command).map_err(|e| format!("cannot start {:?}: {e}", self.command[0]))?);
        }
        let proc = slot.as_mut().expect("spawned above");
        writeln!(proc.stdin, "{line}").and_then(|_| proc.stdin.flush()).map_err(|e| format!("write failed: {e}"))?;
        match proc.lines.recv_timeout(self.timeout) {
            Ok(Ok(out)) => Ok(out),
            Ok(Err(e)) => Err(format!("read failed: {e}")),
            Err(RecvTimeoutError::Timeout) => Err(format!("no answer within {:?}", self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err("process exited".into()),
        }
    }
}

impl BlackBox for SubprocessBlackBox {
    fn query_batch(&self, inputs: &[TokenSequence]) -> socrat_core::Result<Vec<Response>> {
        let mut slot = self.proc.lock().unwrap_or_else(|p| p.into_inner());
        let mut out = Vec::with_capacity(inputs.len());
        for (index, x) in inputs.iter().enumerate() {
            match self.ask(&mut slot, &x.join(self.input_scheme)) {
                Ok(line) if line.trim().is_empty() => out.push(Response::Absent),
                Ok(line) => out.push(match tokenize(&line, self.output_scheme, Side::Output) {
                    Ok(y) => Response::Tokens(y),
                    Err(_) => Response::Absent,
                }),
                Err(reason) => {
                    *slot = None;
                    return Err(Error::black_box(Some(index), reason));
                }
            }
        }
        Ok(out)
    }
}
