export * from "./schema.js";
export * from "./sse.js";
export * from "./board.js";
export * from "./api.js";
export * from "./render.js";
