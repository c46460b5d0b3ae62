//! Build executors: run a build over a staged workspace and capture output.
//!
//! The local compiler executor syntax-checks the workspace's C files and is
//! what the fixture corpus uses. The command-template executor runs an
//! arbitrary shell command with `{workspace}` substituted; point it at a
//! container invocation for real out-of-tree kernel module builds (see the
//! README for the documented template).

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("build executor unavailable: {0}")]
    Unavailable(String),
    #[error("build timed out after {secs}s")]
    Timeout { secs: u64 },
    #[error("build executor io: {0}")]
    Io(String),
}

/// Raw output of one build invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildOutput {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub trait BuildExecutor {
    fn describe(&self) -> String;
    fn build(&self, workspace: &Path) -> Result<BuildOutput, ExecError>;
}

fn run_with_timeout(mut command: Command, timeout: Duration) -> Result<BuildOutput, ExecError> {
    command.stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = command.spawn().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ExecError::Unavailable(format!("{:?}: {e}", command.get_program()))
        } else {
            ExecError::Io(e.to_string())
        }
    })?;

    let deadline = Instant::now() + timeout;
    loop {
        match child.try_wait().map_err(|e| ExecError::Io(e.to_string()))? {
            Some(_) => break,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ExecError::Timeout {
                    secs: timeout.as_secs(),
                });
            }
            None => std::thread::sleep(Duration::from_millis(20)),
        }
    }
    let output = child
        .wait_with_output()
        .map_err(|e| ExecError::Io(e.to_string()))?;
    Ok(BuildOutput {
        exit_code: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    })
}

/// Syntax-checks every `.c` file under the workspace with the system C
/// compiler. Implicit function declarations are promoted to errors, matching
/// kernel build policy, so API-disappearance failures surface reliably.
#[derive(Debug, Clone)]
pub struct LocalCompilerExecutor {
    pub compiler: String,
    pub timeout: Duration,
}

impl Default for LocalCompilerExecutor {
    fn default() -> Self {
        LocalCompilerExecutor {
            compiler: "cc".to_string(),
            timeout: Duration::from_secs(120),
        }
    }
}

impl LocalCompilerExecutor {
    pub fn with_timeout(timeout: Duration) -> Self {
        LocalCompilerExecutor {
            timeout,
            ..LocalCompilerExecutor::default()
        }
    }

    fn collect_c_files(workspace: &Path) -> Result<Vec<std::path::PathBuf>, ExecError> {
        let mut files = Vec::new();
        let mut stack = vec![workspace.to_path_buf()];
        while let Some(dir) = stack.pop() {
            let entries = std::fs::read_dir(&dir).map_err(|e| ExecError::Io(e.to_string()))?;
            for entry in entries {
                let entry = entry.map_err(|e| ExecError::Io(e.to_string()))?;
                let path = entry.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path.extension().and_then(|e| e.to_str()) == Some("c") {
                    files.push(path);
                }
            }
        }
        files.sort();
        Ok(files)
    }
}

impl BuildExecutor for LocalCompilerExecutor {
    fn describe(&self) -> String {
        format!("{} -fsyntax-only", self.compiler)
    }

    fn build(&self, workspace: &Path) -> Result<BuildOutput, ExecError> {
        let files = Self::collect_c_files(workspace)?;
        if files.is_empty() {
            return Ok(BuildOutput {
                exit_code: 0,
                stdout: String::new(),
                stderr: String::new(),
            });
        }
        let mut command = Command::new(&self.compiler);
        command
            .arg("-fsyntax-only")
            .arg("-Wall")
            .arg("-Werror=implicit-function-declaration")
            .args(&files)
            .current_dir(workspace)
            .env("LC_ALL", "C")
            .env("LANG", "C");
        run_with_timeout(command, self.timeout)
    }
}

/// Runs `sh -c <template>` with `{workspace}` substituted by the staged
/// workspace path.
#[derive(Debug, Clone)]
pub struct CommandTemplateExecutor {
    pub template: String,
    pub timeout: Duration,
}

impl CommandTemplateExecutor {
    pub fn new(template: String, timeout: Duration) -> Self {
        CommandTemplateExecutor { template, timeout }
    }
}

impl BuildExecutor for CommandTemplateExecutor {
    fn describe(&self) -> String {
        self.template.clone()
    }

    fn build(&self, workspace: &Path) -> Result<BuildOutput, ExecError> {
        let rendered = self
            .template
            .replace("{workspace}", &workspace.display().to_string());
        let mut command = Command::new("sh");
        command
            .arg("-c")
            .arg(&rendered)
            .current_dir(workspace)
            .env("LC_ALL", "C")
            .env("LANG", "C");
        run_with_timeout(command, self.timeout)
    }
}

/// Test double returning a fixed exit code and output.
#[derive(Debug, Clone, Default)]
pub struct FixedOutcomeExecutor {
    pub exit_code: i32,
    pub stderr: String,
}

impl BuildExecutor for FixedOutcomeExecutor {
    fn describe(&self) -> String {
        format!("fixed exit {}", self.exit_code)
    }

    fn build(&self, _workspace: &Path) -> Result<BuildOutput, ExecError> {
        Ok(BuildOutput {
            exit_code: self.exit_code,
            stdout: String::new(),
            stderr: self.stderr.clone(),
        })
    }
}
