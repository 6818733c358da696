/** Tokenization shared by every encoder in this package. */

/** A token with half-open character offsets into the original sentence. */
export interface Token {
  text: string;
  start: number;
  end: number;
}

const TOKEN_PATTERN = /[\p{L}\p{N}]+/gu;

/**
 * Split a sentence into lowercased alphanumeric tokens.
 *
 * Offsets index the original string so that character spans stated by the
 * inventory can be matched against token boundaries.
 */
export function tokenize(text: string): Token[] {
  const tokens: Token[] = [];
  for (const match of text.matchAll(TOKEN_PATTERN)) {
    tokens.push({
      text: match[0].toLowerCase(),
      start: match.index,
      end: match.index + match[0].length,
    });
  }
  return tokens;
}
