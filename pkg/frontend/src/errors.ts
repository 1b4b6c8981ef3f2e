/** Typed errors mirroring the endpoint's error codes. */

export class BindingError extends Error {
  constructor(readonly code: string, message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Bad request: wrong dtype, byte count, shape, or malformed payload. */
export class ValidationError extends BindingError {
  constructor(message: string) {
    super("validation", message);
  }
}

/** A cache token was used after release, or never existed. */
export class LifecycleError extends BindingError {
  constructor(message: string) {
    super("lifecycle", message);
  }
}

/** The problem exceeds a solver's hard size cap. */
export class CapacityError extends BindingError {
  constructor(message: string) {
    super("capacity", message);
  }
}

/** Anything the endpoint did not classify, and transport failures. */
export class InternalError extends BindingError {
  constructor(message: string) {
    super("internal", message);
  }
}

export function errorFromResponse(code: string, message: string): BindingError {
  switch (code) {
    case "validation":
      return new ValidationError(message);
    case "lifecycle":
      return new LifecycleError(message);
    case "capacity":
      return new CapacityError(message);
    default:
      return new InternalError(message);
  }
}
