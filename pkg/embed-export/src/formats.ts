import * as fs from "node:fs";

export interface DatasetRow {
  id: string;
  text: string;
}

export type DatasetFormat = "olid-tsv" | "two-column-tsv" | "text-lines";

/**
 * Read the dataset layouts the classifier toolkit consumes.  Row ids
 * must match the toolkit's loaders exactly (olid-tsv: first column;
 * two-column-tsv: "r" + 1-based physical line number; text-lines:
 * "r" + 1-based index over non-blank lines, as the predict command
 * assigns), otherwise exported embeddings cannot be joined back to
 * documents.
 */
export function readDataset(path: string, format: DatasetFormat): DatasetRow[] {
  const raw = fs.readFileSync(path, "utf-8");
  const lines = raw.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  const rows: DatasetRow[] = [];
  if (format === "olid-tsv") {
    if (lines.length === 0) {
      throw new Error(`${path}: missing header row`);
    }
    for (let i = 1; i < lines.length; i++) {
      const cols = lines[i].split("\t");
      if (cols.length < 3) {
        throw new Error(`${path}:${i + 1}: expected at least 3 columns`);
      }
      rows.push({ id: cols[0], text: cols[1] });
    }
  } else if (format === "two-column-tsv") {
    for (let i = 0; i < lines.length; i++) {
      const cols = lines[i].split("\t");
      if (cols.length !== 2) {
        throw new Error(`${path}:${i + 1}: expected text<TAB>label`);
      }
      rows.push({ id: `r${i + 1}`, text: cols[0] });
    }
  } else if (format === "text-lines") {
    let n = 0;
    for (const line of lines) {
      if (line.trim().length === 0) continue;
      n += 1;
      rows.push({ id: `r${n}`, text: line });
    }
  } else {
    throw new Error(`unknown dataset format: ${format}`);
  }
  return rows;
}
