/**
 * Static token table for the procedural building language, used for editor
 * highlighting only — parsing always happens on the service side.
 *
 * Language surface: `building NAME { dims X Y Z level NAME x N { TOKENS } }`
 * where a level body is asset tokens and `( ... )*` repeat groups, `*` marks
 * a scalable token, and `|` separates facades.
 */

export const KEYWORDS = ["building", "level", "dims"] as const;

export type TokenKind =
  | "keyword"
  | "repeat" // the contextual `x` before a level repeat count
  | "ident"
  | "number"
  | "star"
  | "pipe"
  | "brace"
  | "paren"
  | "space"
  | "plain"; // anything the grammar would reject

export interface HighlightToken {
  kind: TokenKind;
  text: string;
  start: number; // character offset, inclusive
  end: number; // character offset, exclusive
}

const KEYWORD_SET: ReadonlySet<string> = new Set(KEYWORDS);

function isWordStart(c: string): boolean {
  return /[A-Za-z_]/.test(c);
}

function isWordChar(c: string): boolean {
  return /[A-Za-z0-9_]/.test(c);
}

function isDigit(c: string): boolean {
  return c >= "0" && c <= "9";
}

/**
 * Split `text` into contiguous highlight tokens.  Lossless: concatenating
 * the token texts reproduces the input exactly, so the highlight layer can
 * mirror the textarea character for character.
 */
export function tokenize(text: string): HighlightToken[] {
  const tokens: HighlightToken[] = [];
  let i = 0;
  const push = (kind: TokenKind, end: number) => {
    tokens.push({ kind, text: text.slice(i, end), start: i, end });
    i = end;
  };

  while (i < text.length) {
    const c = text[i] as string;
    if (/\s/.test(c)) {
      let j = i + 1;
      while (j < text.length && /\s/.test(text[j] as string)) {
        j += 1;
      }
      push("space", j);
    } else if (c === "{" || c === "}") {
      push("brace", i + 1);
    } else if (c === "(" || c === ")") {
      push("paren", i + 1);
    } else if (c === "*") {
      push("star", i + 1);
    } else if (c === "|") {
      push("pipe", i + 1);
    } else if (isDigit(c) || (c === "." && isDigit(text[i + 1] ?? ""))) {
      let j = i;
      while (j < text.length && isDigit(text[j] as string)) {
        j += 1;
      }
      if (text[j] === "." && isDigit(text[j + 1] ?? "")) {
        j += 1;
        while (j < text.length && isDigit(text[j] as string)) {
          j += 1;
        }
      }
      push("number", j);
    } else if (isWordStart(c)) {
      let j = i + 1;
      while (j < text.length && isWordChar(text[j] as string)) {
        j += 1;
      }
      const word = text.slice(i, j);
      if (KEYWORD_SET.has(word)) {
        push("keyword", j);
      } else if (word === "x" && startsRepeatCount(text, j)) {
        push("repeat", j);
      } else {
        push("ident", j);
      }
    } else {
      push("plain", i + 1);
    }
  }
  return tokens;
}

/** After an `x`, does a number follow (skipping spaces)?  Then it is the
 * level repeat marker rather than an asset named `x`. */
function startsRepeatCount(text: string, from: number): boolean {
  let j = from;
  while (j < text.length && /[ \t]/.test(text[j] as string)) {
    j += 1;
  }
  return isDigit(text[j] ?? "");
}
