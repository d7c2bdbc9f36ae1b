export class ExporterError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class ModelLoadError extends ExporterError {}
export class ImageDecodeError extends ExporterError {}
export class InvalidJobError extends ExporterError {}
