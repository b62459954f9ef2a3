use crate::domain::DebateTurn;

const ABSTRACT_CHARS: usize = 120;

fn header(turn: &DebateTurn) -> String {
    format!(
        "[Turn {} | {} | {} | {}]",
        turn.turn_index,
        turn.stance.team_name(),
        turn.role.display_name(),
        turn.stage.display_name()
    )
}

/// One-line stand-in for a turn: its header plus the leading sentence,
/// clipped to a fixed number of characters.
pub fn abstract_line(turn: &DebateTurn) -> String {
    let text = turn.text.trim();
    let first = text
        .find(['.', '!', '?', '\n'])
        .map_or(text, |end| &text[..=end])
        .trim();
    let clipped: String = first.chars().take(ABSTRACT_CHARS).collect();
    let ellipsis = if clipped.len() < text.len() { " ..." } else { "" };
    format!("{} (abstract) {clipped}{ellipsis}", header(turn))
}

fn full_block(turn: &DebateTurn) -> String {
    format!("{}\n{}", header(turn), turn.text.trim())
}

/// Renders turns as a transcript. When the full text exceeds `budget_chars`,
/// the oldest turns are replaced by their one-line abstracts until it fits
/// (or every turn is abstracted).
pub fn render_history<'a>(turns: impl IntoIterator<Item = &'a DebateTurn>, budget_chars: usize) -> String {
    let turns: Vec<&DebateTurn> = turns.into_iter().collect();
    let mut blocks: Vec<String> = turns.iter().map(|t| full_block(t)).collect();
    let total = |blocks: &[String]| -> usize {
        blocks.iter().map(|b| b.chars().count()).sum::<usize>() + 2 * blocks.len().saturating_sub(1)
    };
    let mut next = 0;
    while total(&blocks) > budget_chars && next < blocks.len() {
        blocks[next] = abstract_line(turns[next]);
        next += 1;
    }
    if next > 0 {
        log::debug!("history over budget: abstracted {next} of {} turns", turns.len());
    }
    blocks.join("\n\n")
}
