export { ExportError } from "./errors.js";
export {
  availableEncoders,
  DEFAULT_ENCODER_ID,
  fnv1a32,
  getEncoder,
  poolTokens,
  registerEncoder,
  subTokenFeatures,
  type SentenceEncoder,
} from "./encoder.js";
export { loadInventory, normalizeLemma, POS_TAGS } from "./inventory.js";
export type { ExampleSentence, Gloss, Inventory, PosTag } from "./inventory.js";
export {
  decodeStore,
  encodeStore,
  FORMAT_VERSION,
  MAGIC,
  MIN_DIM,
  type EmbeddingRecord,
} from "./semb.js";
export { tokenize, type Token } from "./tokenize.js";
export { resolveSpan, runExport, TOOL_VERSION, type ExportJob, type ExportResult } from "./export.js";
export { main } from "./cli.js";
