/** Run-manifest validation: every panel input must sit next to the
 * manifest of the run that produced it, with the matching subcommand and
 * (optionally) the expected config hash. */

import { readFileSync } from "fs";
import { join } from "path";

export class ManifestError extends Error {}

export interface Manifest {
  subcommand: string;
  config_sha256: string;
  seed: number;
  outputs: string[];
}

export function loadManifest(dir: string): Manifest {
  let raw: string;
  try {
    raw = readFileSync(join(dir, "manifest.json"), "utf-8");
  } catch {
    throw new ManifestError(`missing manifest.json in ${dir}`);
  }
  const man = JSON.parse(raw);
  for (const key of ["subcommand", "config_sha256", "outputs"]) {
    if (!(key in man)) throw new ManifestError(`manifest lacks ${key}`);
  }
  return man as Manifest;
}

export function validateInput(
  dir: string,
  expectedSubcommand: string,
  csvName: string,
  expectedSha?: string,
): Manifest {
  const man = loadManifest(dir);
  if (man.subcommand !== expectedSubcommand) {
    throw new ManifestError(
      `panel expects artifacts of '${expectedSubcommand}', manifest says '${man.subcommand}'`,
    );
  }
  if (!man.outputs.includes(csvName)) {
    throw new ManifestError(`${csvName} is not an output of this run`);
  }
  if (expectedSha !== undefined && man.config_sha256 !== expectedSha) {
    throw new ManifestError(
      `config hash mismatch: expected ${expectedSha}, manifest has ${man.config_sha256}`,
    );
  }
  return man;
}
