/** Server values are displayed exactly as received; only derived badges
 * (deltas) get decimal formatting, so they cannot be mistaken for
 * forecast numbers. */

export function verbatim(value: number): string {
  return String(value);
}

export function signedDelta(value: number, digits = 2): string {
  const sign = value < 0 ? "-" : "+";
  return sign + Math.abs(value).toFixed(digits);
}
