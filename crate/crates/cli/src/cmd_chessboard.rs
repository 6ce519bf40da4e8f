//! `markerfind chessboard`: locate all inner corners of a board target.

use std::io::Write;

use markerfind_core::chessboard::{find_chessboard_corners, BoardSpec, ChessboardError};
use markerfind_core::image::{to_grayscale, GrayscaleMethod};
use markerfind_core::pnm::PnmImage;

use crate::args::ChessboardArgs;
use crate::io::{load_image, write_file};
use crate::output::{to_json_bytes, ChessboardOut};
use crate::CliError;

pub fn parse_board(spec: &str) -> Result<BoardSpec, CliError> {
    let (w, h) = spec
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::config(format!("--board: expected WxH, got {:?}", spec)))?;
    let width: u32 = w
        .parse()
        .map_err(|_| CliError::config(format!("--board: bad width {:?}", w)))?;
    let height: u32 = h
        .parse()
        .map_err(|_| CliError::config(format!("--board: bad height {:?}", h)))?;
    BoardSpec::new(width, height)
        .map_err(|e| CliError::config(format!("--board: {}", e)))
}

pub fn run(args: ChessboardArgs) -> Result<(), CliError> {
    let spec = parse_board(&args.board)?;
    let gray = match load_image(&args.image)? {
        PnmImage::Gray(g) => g,
        PnmImage::Color(c) => to_grayscale(&c, GrayscaleMethod::Luminance),
    };
    let grid = match find_chessboard_corners(&gray, &spec) {
        Ok(grid) => grid,
        Err(ChessboardError::NotFound) => {
            return Err(CliError::NotFound(format!(
                "no {}x{} chessboard found in {}",
                spec.width,
                spec.height,
                args.image.display()
            )));
        }
        Err(e) => return Err(CliError::config(format!("{}", e))),
    };

    let out = ChessboardOut::from_grid(args.image.display().to_string(), &spec, &grid);
    let json = to_json_bytes(&out);
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => {
            std::io::stdout()
                .write_all(&json)
                .map_err(|e| CliError::config(format!("stdout: {}", e)))?;
        }
    }
    Ok(())
}
