//! braillecam: Braille embossing CAM toolchain front end.
//!
//! Every subcommand is a client of the HTTP service. With `--server` (or
//! BRAILLECAM_SERVER) it talks to a running instance; otherwise it spins up
//! an in-process server on an ephemeral localhost port and uses that.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use braillecam_api::{
    GcodeRequest, JobConfig, RoundtripRequest, SendRequest, SimulateRequest, TranslateRequest,
};
use braillecam_client::{Client, ClientError};

/// Exit codes: 0 success, 1 I/O, 2 validation or domain error,
/// 3 verification failure.
const EXIT_IO: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "braillecam",
    version,
    about = "Braille embossing CAM toolchain"
)]
struct Cli {
    /// Base URL of a running braillecam server; default is an in-process
    /// instance.
    #[arg(long, global = true, env = "BRAILLECAM_SERVER")]
    server: Option<String>,

    /// Path to a JSON job config; all fields optional.
    #[arg(long, global = true, env = "BRAILLECAM_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a text file to Unicode Braille.
    Translate {
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate embosser G-code for a text file.
    Gcode {
        input: PathBuf,
        /// Reflect the layout for reverse-side embossing.
        #[arg(long)]
        mirror: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a G-code file on the virtual embosser; print the strike
    /// raster and time estimate.
    Simulate {
        input: PathBuf,
        /// Raster JSON output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the raster as SVG to this path.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Verify the full pipeline: encode, lay out, emit, execute, decode,
    /// compare with the input.
    Roundtrip {
        input: PathBuf,
        #[arg(long)]
        mirror: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stream a G-code file to a controller with planner-buffer flow
    /// control.
    Send {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = TransportKind::Loopback)]
        transport: TransportKind,
        /// Transcript path for the file transport; default
        /// `<input>.transcript`.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service in the foreground.
    Serve {
        #[arg(long, default_value = "127.0.0.1:9600")]
        addr: SocketAddr,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransportKind {
    /// In-process virtual controller.
    Loopback,
    /// Loopback plus a replayable wire transcript on disk.
    File,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    fn domain(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }

    fn verify(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_VERIFY,
            message: message.into(),
        }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Failure {
        match &e {
            ClientError::Transport(_) => Failure::io(e.to_string()),
            _ => Failure::domain(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Command::Serve { addr } = cli.command {
        return serve_forever(addr);
    }

    let config = load_config(cli.config.as_deref())?;
    let client = connect(cli.server.as_deref())?;

    match cli.command {
        Command::Translate { input, out } => translate(&client, config, &input, out.as_deref()),
        Command::Gcode { input, mirror, out } => {
            gcode(&client, config, &input, mirror, out.as_deref())
        }
        Command::Simulate { input, out, svg } => {
            simulate(&client, config, &input, out.as_deref(), svg.as_deref())
        }
        Command::Roundtrip { input, mirror, out } => {
            roundtrip(&client, config, &input, mirror, out.as_deref())
        }
        Command::Send {
            input,
            transport,
            transcript,
            out,
        } => send(
            &client,
            config,
            &input,
            transport,
            transcript,
            out.as_deref(),
        ),
        Command::Serve { .. } => unreachable!("handled above"),
    }
}

fn serve_forever(addr: SocketAddr) -> Result<(), Failure> {
    let (local, handle) = braillecam_service::spawn_server_thread(addr)
        .map_err(|e| Failure::io(format!("cannot bind {addr}: {e}")))?;
    println!("braillecam service listening on http://{local}");
    handle
        .join()
        .map_err(|_| Failure::io("server thread panicked"))?;
    Ok(())
}

fn connect(server: Option<&str>) -> Result<Client, Failure> {
    let base = match server {
        Some(url) => url.to_string(),
        None => {
            let (addr, _handle) = braillecam_service::spawn_server_thread(
                "127.0.0.1:0".parse().expect("literal addr"),
            )
            .map_err(|e| Failure::io(format!("cannot start embedded server: {e}")))?;
            format!("http://{addr}")
        }
    };
    let client = Client::new(&base);
    client
        .health()
        .map_err(|e| Failure::io(format!("server {base} unreachable: {e}")))?;
    Ok(client)
}

fn load_config(path: Option<&Path>) -> Result<Option<JobConfig>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read config {}: {e}", path.display())))?;
    let config = JobConfig::from_json_str(&text).map_err(|e| Failure::domain(e.to_string()))?;
    Ok(Some(config))
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

/// Text inputs tolerate Windows line endings; the pipeline itself only
/// knows LF.
fn read_text_input(path: &Path) -> Result<String, Failure> {
    Ok(read_input(path)?.replace("\r\n", "\n"))
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, content)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Turns the char position in an encode error into line and column for a
/// friendlier message.
fn position_hint(text: &str, message: &str) -> String {
    let Some(tail) = message.rsplit("position ").next() else {
        return String::new();
    };
    let digits: String = tail.chars().take_while(|c| c.is_ascii_digit()).collect();
    let Ok(pos) = digits.parse::<usize>() else {
        return String::new();
    };
    let mut line = 1usize;
    let mut column = 1usize;
    for (i, ch) in text.chars().enumerate() {
        if i == pos {
            break;
        }
        if ch == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    format!(" (line {line}, column {column})")
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn translate(
    client: &Client,
    config: Option<JobConfig>,
    input: &Path,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let text = read_text_input(input)?;
    let response = client
        .translate(&TranslateRequest {
            text: text.clone(),
            config,
        })
        .map_err(|e| match &e {
            ClientError::Api { kind, message, .. } if kind == "unsupported_character" => {
                Failure::domain(format!("{message}{}", position_hint(&text, message)))
            }
            _ => Failure::from(e),
        })?;
    print_warnings(&response.warnings);
    write_output(out, &response.braille)
}

fn gcode(
    client: &Client,
    config: Option<JobConfig>,
    input: &Path,
    mirror: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let text = read_text_input(input)?;
    let response = client.gcode(&GcodeRequest {
        text,
        mirror,
        config,
    })?;
    print_warnings(&response.warnings);
    write_output(out, &response.program)
}

fn simulate(
    client: &Client,
    config: Option<JobConfig>,
    input: &Path,
    out: Option<&Path>,
    svg: Option<&Path>,
) -> Result<(), Failure> {
    let program = read_input(input)?;
    let response = client.simulate(&SimulateRequest { program, config })?;
    print_warnings(&response.warnings);
    let document = serde_json::json!({
        "raster": response.raster,
        "strike_count": response.strike_count,
        "elapsed_s": response.elapsed_s,
    });
    // Both outputs only land after a fully successful simulation.
    write_output(out, &format!("{document}\n"))?;
    if let Some(svg_path) = svg {
        write_output(Some(svg_path), &response.svg)?;
    }
    Ok(())
}

fn roundtrip(
    client: &Client,
    config: Option<JobConfig>,
    input: &Path,
    mirror: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let text = read_text_input(input)?;
    let response = client.roundtrip(&RoundtripRequest {
        text,
        mirror,
        config,
    })?;
    print_warnings(&response.warnings);
    let report = serde_json::json!({
        "pass": response.pass,
        "decoded": response.decoded,
        "stage": response.stage,
        "message": response.message,
    });
    write_output(out, &format!("{report}\n"))?;
    if !response.pass {
        let detail = match (&response.stage, &response.message) {
            (Some(stage), Some(message)) => format!("{stage} stage failed: {message}"),
            _ => "decoded text differs from input".to_string(),
        };
        return Err(Failure::verify(format!("round trip failed: {detail}")));
    }
    Ok(())
}

fn send(
    client: &Client,
    config: Option<JobConfig>,
    input: &Path,
    transport: TransportKind,
    transcript: Option<PathBuf>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let program = read_input(input)?;
    let record = transport == TransportKind::File;
    let response = client.send(&SendRequest {
        program,
        config,
        record_transcript: record,
    })?;
    if record {
        let path = transcript.unwrap_or_else(|| {
            let mut p = input.as_os_str().to_owned();
            p.push(".transcript");
            PathBuf::from(p)
        });
        let text = response.transcript.as_deref().unwrap_or("");
        fs::write(&path, text)
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("transcript written to {}", path.display());
    }
    let report =
        serde_json::to_string(&response.report).map_err(|e| Failure::domain(e.to_string()))?;
    write_output(out, &format!("{report}\n"))?;
    if !response.report.errors.is_empty() {
        let first = &response.report.errors[0];
        return Err(Failure::domain(format!(
            "transfer failed at line {}: {}",
            first
                .line
                .map_or_else(|| "?".to_string(), |n| n.to_string()),
            first.message
        )));
    }
    Ok(())
}
