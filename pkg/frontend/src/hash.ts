/** Data-series hashing: proves a figure is a pure view of its CSV.
 *
 * The hash covers the raw CSV cells (verbatim strings, newline-joined) that
 * a series consumed, so any recomputation or reformatting of values between
 * file and figure changes the digest.
 */

import { createHash } from "node:crypto";

export function seriesHash(raw: string[]): string {
  return createHash("sha256").update(raw.join("\n"), "utf8").digest("hex");
}
