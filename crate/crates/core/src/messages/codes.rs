//! Numeric enumerations carried on the wire. Codes and names match the
//! standard ASN.1 definitions, spelling included.

wire_enum! {
    /// Returned by the eUICC when it cannot authenticate the server.
    pub enum AuthenticateErrorCode {
        InvalidCertificate = 1 => "invalidCertificate",
        InvalidSignature = 2 => "invalidSignature",
        UnsupportedCurve = 3 => "unsupportedCurve",
        NoSession = 4 => "noSession",
        InvalidOid = 5 => "invalidOid",
        EuiccChallengeMismatch = 6 => "euiccChallengeMismatch",
        CiPkUnknown = 7 => "ciPKUnknown",
        TransactionIdError = 8 => "transactionIdError",
        MissingCrl = 9 => "missingCrl",
        InvalidCrlSignature = 10 => "invalidCrlSignature",
        RevokedCert = 11 => "revokedCert",
        InvalidCertOrCrlTime = 12 => "invalidCertOrCrlTime",
        InvalidCertOrCrlConfiguration = 13 => "invalidCertOrCrlConfiguration",
        InvalidIccid = 14 => "invalidIccid",
        UndefinedError = 127 => "undefinedError",
    }
}

wire_enum! {
    pub enum CancelSessionReason {
        EndUserRejection = 0 => "endUserRejection",
        Postponed = 1 => "postponed",
        Timeout = 2 => "timeout",
        PprNotAllowed = 3 => "pprNotAllowed",
        MetadataMismatch = 4 => "metadataMismatch",
        LoadBppExecutionError = 5 => "loadBppExecutionError",
        SessionAborted = 16 => "sessionAborted",
        EnterpriseProfilesNotSupported = 17 => "enterpriseProfilesNotSupported",
        EnterpriseRulesNotAllowed = 18 => "enterpriseRulesNotAllowed",
        EnterpriseProfileNotAllowed = 19 => "enterpriseProfileNotAllowed",
        EnterpriseOidMismatch = 20 => "enterpriseOidMismatch",
        EnterpriseRulesError = 21 => "enterpriseRulesError",
        EnterpriseProfilesOnly = 22 => "enterpriseProfilesOnly",
        LprNotSupported = 23 => "lprNotSupported",
        LprNetworkDataNotAllowed = 24 => "lprNetworkDataNotAllowed",
        EmptyProfileOrSpName = 25 => "emptyProfileOrSpName",
        RpmDisabled = 27 => "rpmDisabled",
        InvalidRpmPackage = 28 => "invalidRpmPackage",
        LoadRpmPackageError = 29 => "loadRpmPackageError",
        UndefinedReason = 127 => "undefinedReason",
    }
}

wire_enum! {
    pub enum CancelSessionErrorCode {
        InvalidTransactionId = 5 => "invalidTransactionId",
        UndefinedError = 127 => "undefinedError",
    }
}

wire_enum! {
    /// `authenticateClientError` of the ES9+ AuthenticateClient response.
    pub enum AuthenticateClientErrorCode {
        EumCertificateInvalid = 1 => "eumCertificateInvalid",
        EumCertificateExpired = 2 => "eumCertificateExpired",
        EuiccCertificateInvalid = 3 => "euiccCertificateInvalid",
        EuiccCertificateExpired = 4 => "euiccCertificateExpired",
        EuiccSignatureInvalid = 5 => "euiccSignatureInvalid",
        MatchingIdRefused = 6 => "matchingIdRefused",
        EidMismatch = 7 => "eidMismatch",
        NoEligibleProfile = 8 => "noEligibleProfile",
        CiPkUnknown = 9 => "ciPKUnknown",
        InvalidTransactionId = 10 => "invalidTransactionId",
        InsufficientMemory = 11 => "insufficientMemory",
        CiPkMismatch = 12 => "ciPKMismatch",
        EuiccRspCapabilityHasChanged = 13 => "euiccRspCapabilityHasChanged",
        LpaRspCapabilityHasChanged = 14 => "lpaRspCapabilityHasChanged",
        DeviceChangeNotSupported = 15 => "deviceChangeNotSupported",
        DeviceChangeNotAllowed = 16 => "deviceChangeNotAllowed",
        // Spelled as in the ASN.1 source.
        IccidUnknown = 17 => "iccidUnkwon",
        InvalidInputData = 124 => "invalidInputData",
        MissingInputData = 125 => "missingInputData",
        FunctionProviderBusy = 126 => "functionProviderBusy",
        UndefinedError = 127 => "undefinedError",
    }
}

wire_enum! {
    pub enum DownloadErrorCode {
        InvalidCertificate = 1 => "invalidCertificate",
        InvalidSignature = 2 => "invalidSignature",
        NoSession = 4 => "noSession",
        InvalidTransactionId = 5 => "invalidTransactionId",
        UndefinedError = 127 => "undefinedError",
    }
}

wire_enum! {
    pub enum GetBppErrorCode {
        EuiccSignatureInvalid = 1 => "euiccSignatureInvalid",
        ConfirmationCodeMissing = 2 => "confirmationCodeMissing",
        ConfirmationCodeRefused = 3 => "confirmationCodeRefused",
        ConfirmationCodeRetriesExceeded = 4 => "confirmationCodeRetriesExceeded",
        BppRebindingRefused = 5 => "bppRebindingRefused",
        DownloadOrderExpired = 6 => "downloadOrderExpired",
        InvalidTransactionId = 95 => "invalidTransactionId",
        InvalidInputData = 124 => "invalidInputData",
        MissingInputData = 125 => "missingInputData",
        FunctionProviderBusy = 126 => "functionProviderBusy",
        UndefinedError = 127 => "undefinedError",
    }
}

wire_enum! {
    pub enum BppCommandId {
        InitialiseSecureChannel = 0 => "initialiseSecureChannel",
        ConfigureIsdp = 1 => "configureISDP",
        StoreMetadata = 2 => "storeMetadata",
        StoreMetadata2 = 3 => "storeMetadata2",
        ReplaceSessionKeys = 4 => "replaceSessionKeys",
        LoadProfileElements = 5 => "loadProfileElements",
    }
}

wire_enum! {
    pub enum ErrorReason {
        IncorrectInputValues = 1 => "incorrectInputValues",
        InvalidSignature = 2 => "invalidSignature",
        InvalidTransactionId = 3 => "invalidTransactionId",
        UnsupportedCrtValues = 4 => "unsupportedCrtValues",
        UnsupportedRemoteOperationType = 5 => "unsupportedRemoteOperationType",
        UnsupportedProfileClass = 6 => "unsupportedProfileClass",
        BspStructureError = 7 => "bspStructureError",
        BspSecurityError = 8 => "bspSecurityError",
        InstallFailedDueToIccidAlreadyExistsOnEuicc = 9 => "installFailedDueToIccidAlreadyExistsOnEuicc",
        InstallFailedDueToInsufficientMemoryForProfile = 10 => "installFailedDueToInsufficientMemoryForProfile",
        InstallFailedDueToInterruption = 11 => "installFailedDueToInterruption",
        InstallFailedDueToPeProcessingError = 12 => "installFailedDueToPEProcessingError",
        InstallFailedDueToDataMismatch = 13 => "installFailedDueToDataMismatch",
        TestProfileInstallFailedDueToInvalidNaaKey = 14 => "testProfileInstallFailedDueToInvalidNaaKey",
        PprNotAllowed = 15 => "pprNotAllowed",
        EnterpriseProfilesNotSupported = 17 => "enterpriseProfilesNotSupported",
        EnterpriseRulesNotAllowed = 18 => "enterpriseRulesNotAllowed",
        EnterpriseProfileNotAllowed = 19 => "enterpriseProfileNotAllowed",
        EnterpriseOidMismatch = 20 => "enterpriseOidMismatch",
        EnterpriseRulesError = 21 => "enterpriseRulesError",
        EnterpriseProfilesOnly = 22 => "enterpriseProfilesOnly",
        LprNotSupported = 23 => "lprNotSupported",
        UnknownTlvInMetadata = 26 => "unknownTlvInMetadata",
        InstallFailedDueToUnknownError = 127 => "installFailedDueToUnknownError",
    }
}

wire_enum! {
    pub enum OperationType {
        ProfileDownload = 0 => "profileDownload",
        Rpm = 1 => "rpm",
    }
}

wire_enum! {
    /// Errors of ES9+ InitiateAuthentication. Not enumerated by the source
    /// material; the values are this crate's own.
    pub enum InitiateAuthErrorCode {
        InvalidSmdpAddress = 1 => "invalidSmdpAddress",
        NoCommonRoot = 2 => "noCommonRoot",
        UndefinedError = 127 => "undefinedError",
    }
}

wire_enum! {
    pub enum HandleNotificationErrorCode {
        EuiccSignatureInvalid = 1 => "euiccSignatureInvalid",
        UndefinedError = 127 => "undefinedError",
    }
}

wire_enum! {
    pub enum RemoveNotificationStatus {
        Ok = 0 => "ok",
        UnknownSeqNumber = 1 => "unknownSeqNumber",
        UndefinedError = 127 => "undefinedError",
    }
}

wire_enum! {
    pub enum EimConfigStatus {
        Ok = 0 => "ok",
        AlreadyAssociated = 1 => "alreadyAssociated",
        BadSignature = 2 => "badSignature",
        NotAssociated = 3 => "notAssociated",
        /// The operation counter did not increase.
        Replayed = 4 => "replayed",
    }
}

wire_enum! {
    pub enum EimOperationKind {
        Replace = 0 => "replace",
        Remove = 1 => "remove",
    }
}
